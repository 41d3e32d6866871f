#include "levelsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>

namespace levelsim {

namespace {
// Reserved substreams; particle id i uses substream i + kParticleStreamBase.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kImmigrationStream = 1;
constexpr std::uint64_t kCatastropheStream = 2;
constexpr std::uint64_t kEnvStream = 3;
constexpr std::uint64_t kParticleStreamBase = 8;
}  // namespace

void motion_step(std::vector<double>& location, double dt, const MotionSpec& motion,
                 RngStream& rng) {
  if (!(dt >= 0.0)) throw std::invalid_argument("motion_step: dt must be >= 0");
  if (motion.kind == MotionKind::frozen || dt == 0.0) return;
  double sd = std::sqrt(motion.sigma2 * dt);
  for (double& c : location) c += sd * rng.normal();
}

double Model::default_lambda_max(double k, double a_min_val, double b_max_val) {
  double lam = 4.0 * k;
  if (b_max_val > 0.0 && a_min_val > 0.0) lam = std::max(lam, 4.0 * b_max_val / a_min_val);
  return lam;
}

void Model::validate() const {
  if (environment) {
    environment->validate();
    if (!(levels.r > 0.0)) throw std::invalid_argument("Model: ceiling must be > 0");
    if (!environment->limit_mode) {
      double sq = std::sqrt(environment->speedup);
      for (std::size_t l = 0; l < environment->m(); ++l)
        if (!(levels.r * environment->a[l] - sq * environment->b[l] >= 0.0))
          throw std::invalid_argument(
              "Model: environment prelimit needs r*a(l) - sqrt(speedup)*b(l) >= 0 for every state");
    }
  } else {
    levels.validate();
  }
  if (window < 0.0 || window > levels.r)
    throw std::invalid_argument("Model: window must lie in (0, r]");
  if (ceiling_mode) {
    if (!(window > 0.0)) throw std::invalid_argument("Model: ceiling mode needs a window K");
    if (!(levels.r >= 4.0 * window))
      throw std::invalid_argument("Model: ceiling mode needs Lambda_max >= 4*K");
  }
  if (!offspring.empty()) offspring.validate(levels.b, levels.r);
  if (multitype) multitype->validate(levels.r);
  if (immigration) immigration->validate();
  if (catastrophe) catastrophe->validate();
  if (a_of_x || b_of_x) {
    if (!(a_max > 0.0))
      throw std::invalid_argument("Model: location-dependent rates need a declared a_max > 0");
    if (!(grid_step > 0.0)) throw std::invalid_argument("Model: grid_step must be > 0");
  }
  if (immortal_zero_particle && levels.b > 0.0 && !environment)
    throw std::invalid_argument("Model: immortal particle requires b <= 0");
  if (level_law == LevelLaw::exponential) {
    if (ceiling_mode || immigration || multitype || catastrophe || environment ||
        !offspring.empty() || a_of_x)
      throw std::invalid_argument("Model: exponential levels are only for the plain scalar model");
  }
  if (motion.kind == MotionKind::brownian && motion.dim <= 0)
    throw std::invalid_argument("Model: brownian motion needs dim >= 1");
}

std::string EventRecord::csv_header(int dim) {
  std::string h = "event,time,id,parent_id,level";
  for (int i = 0; i < dim; ++i) h += ",loc" + std::to_string(i);
  return h;
}

std::string EventRecord::csv_row(int dim) const {
  static const char* names[] = {"birth", "death", "immigrate", "catastrophe"};
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s,%.17g,%llu,%llu,%.17g", names[static_cast<int>(kind)], time,
                static_cast<unsigned long long>(id), static_cast<unsigned long long>(parent_id),
                level);
  std::string row = buf;
  for (int i = 0; i < dim; ++i) {
    std::snprintf(buf, sizeof(buf), ",%.17g",
                  i < static_cast<int>(location.size()) ? location[i] : 0.0);
    row += buf;
  }
  return row;
}

Simulation::Simulation(const Model& model, std::uint64_t seed, std::uint64_t replicate,
                       bool record_history)
    : model_(model), seed_(seed), replicate_(replicate), record_(record_history) {
  model_.validate();
  grid_mode_ = static_cast<bool>(model_.a_of_x) ||
               (model_.environment && model_.environment->limit_mode);
  init_rng_ = stream(kInitStream);
  immigration_rng_ = stream(kImmigrationStream);
  catastrophe_rng_ = stream(kCatastropheStream);
  env_rng_ = stream(kEnvStream);
  if (model_.environment) {
    env_sqrt_speedup_ = std::sqrt(model_.environment->speedup);
    env_a_max_ = *std::max_element(model_.environment->a.begin(), model_.environment->a.end());
    // The chain starts in its stationary law so that time zero is typical.
    auto pi = model_.environment->stationary();
    double pick = env_rng_.uniform();
    double acc = 0.0;
    env_state_ = static_cast<int>(pi.size()) - 1;
    for (std::size_t l = 0; l < pi.size(); ++l) {
      acc += pi[l];
      if (pick < acc) {
        env_state_ = static_cast<int>(l);
        break;
      }
    }
  }
  if (model_.immigration && model_.immigration->total_rate_density > 0.0) {
    double rate = model_.levels.r * model_.immigration->total_rate_density;
    queue_.push({immigration_rng_.exponential(rate), kGlobalSlot, 0, kImmigration});
  }
  if (model_.catastrophe && model_.catastrophe->event_rate > 0.0)
    queue_.push({catastrophe_rng_.exponential(model_.catastrophe->event_rate), kGlobalSlot, 0,
                 kCatastrophe});
  if (model_.environment && !model_.environment->limit_mode) {
    double q = -model_.environment->q[env_state_][env_state_];
    if (q > 0.0)
      queue_.push({env_rng_.exponential(model_.environment->speedup * q), kGlobalSlot, 0,
                   kEnvJump});
  }
}

RngStream Simulation::stream(std::uint64_t substream) const {
  return RngStream(seed_, replicate_, substream);
}

void Simulation::init_uniform(std::size_t n0) {
  if (next_id_ != 1) throw std::logic_error("Simulation: already initialized");
  for (std::size_t i = 0; i < n0; ++i) {
    double level;
    if (model_.immortal_zero_particle && i == 0) {
      level = 0.0;
    } else if (model_.level_law == LevelLaw::exponential) {
      level = init_rng_.exponential(1.0 / model_.levels.r);
    } else {
      level = init_rng_.uniform(0.0, model_.levels.r);
    }
    int type = model_.initial_type && !(model_.immortal_zero_particle && i == 0)
                   ? model_.initial_type(init_rng_)
                   : 0;
    create_particle(0.0, level, 0, kGlobalSlot, type);
  }
}

void Simulation::init_poisson_levels(double y) {
  if (next_id_ != 1) throw std::logic_error("Simulation: already initialized");
  if (!(y >= 0.0)) throw std::invalid_argument("init_poisson_levels: y must be >= 0");
  if (!model_.ceiling_mode && !(model_.environment && model_.environment->limit_mode))
    throw std::invalid_argument("init_poisson_levels: requires ceiling mode");
  std::uint64_t n = init_rng_.poisson(y * model_.levels.r);
  bool immortal = model_.immortal_zero_particle;
  for (std::uint64_t i = 0; i < n + (immortal ? 1 : 0); ++i) {
    double level = (immortal && i == 0) ? 0.0 : init_rng_.uniform(0.0, model_.levels.r);
    int type = model_.initial_type ? model_.initial_type(init_rng_) : 0;
    create_particle(0.0, level, 0, kGlobalSlot, type);
  }
}

void Simulation::effective_params(const Slot& s, double& a, double& b) const {
  if (model_.multitype) {
    a = model_.multitype->a_of(static_cast<std::size_t>(s.type));
    b = model_.multitype->b[static_cast<std::size_t>(s.type)];
  } else if (model_.environment && !model_.environment->limit_mode) {
    a = model_.environment->a[env_state_];
    b = env_sqrt_speedup_ * model_.environment->b[env_state_];
  } else {
    a = model_.levels.a;
    b = model_.levels.b;
  }
}

double Simulation::level_at(std::uint32_t slot, double t) const {
  const Slot& s = slots_[slot];
  double dt = t - s.ref_time;
  if (dt <= 0.0) return s.ref_level;
  if (!model_.offspring.empty()) {
    const OffspringRates& o = model_.offspring;
    double b = model_.levels.b, r = model_.levels.r;
    return rk4_advance([&](double u) { return multi_offspring_drift(std::min(u, r), o, b, r); },
                       s.ref_level, dt);
  }
  if (model_.level_law == LevelLaw::exponential) {
    double r = model_.levels.r;
    LevelParams pv{model_.levels.a * r, model_.levels.b, 1.0};
    double v0 = -std::expm1(-s.ref_level / r);
    double v = level_flow(v0, dt, pv);
    if (v >= 1.0) return kInf;
    return -r * std::log1p(-v);
  }
  double a, b;
  effective_params(s, a, b);
  return level_flow(s.ref_level, dt, LevelParams{a, b, model_.levels.r});
}

void Simulation::rebase_level(std::uint32_t slot, double t) {
  Slot& s = slots_[slot];
  if (t <= s.ref_time) return;
  double u = level_at(slot, t);
  s.ref_level = u;
  s.ref_time = t;
}

double Simulation::compute_death_time(std::uint32_t slot) const {
  if (grid_mode_) return kInf;  // grid driver detects crossings while stepping
  const Slot& s = slots_[slot];
  double r = model_.levels.r;
  if (!model_.offspring.empty()) {
    const OffspringRates& o = model_.offspring;
    double b = model_.levels.b;
    double horizon = death_horizon_ - s.ref_time;
    if (horizon <= 0.0) return kInf;
    double hit = rk4_hit_time([&](double u) { return multi_offspring_drift(std::min(u, r), o, b, r); },
                              s.ref_level, r, horizon);
    return hit == kInf ? kInf : s.ref_time + hit;
  }
  if (model_.level_law == LevelLaw::exponential) {
    LevelParams pv{model_.levels.a * r, model_.levels.b, 1.0};
    double v0 = -std::expm1(-s.ref_level / r);
    double hit = level_hit_time(v0, 1.0, pv);
    return hit == kInf ? kInf : s.ref_time + hit;
  }
  double a, b;
  effective_params(s, a, b);
  double hit = level_hit_time(s.ref_level, r, LevelParams{a, b, r});
  return hit == kInf ? kInf : s.ref_time + hit;
}

double Simulation::proposal_bound(const Slot& s) const {
  double r = model_.levels.r;
  if (!model_.offspring.empty()) return model_.offspring.proposal_rate(r);
  if (model_.multitype) return 2.0 * model_.multitype->a_of(static_cast<std::size_t>(s.type)) * r;
  if (model_.environment) {
    if (model_.environment->limit_mode) return 2.0 * model_.environment->abar() * r;
    return 2.0 * env_a_max_ * r;
  }
  if (model_.a_of_x) return 2.0 * model_.a_max * r;
  return 2.0 * model_.levels.a * r;
}

void Simulation::arm(std::uint32_t slot, double from_time) {
  Slot& s = slots_[slot];
  double bound = proposal_bound(s);
  double tprop = bound > 0.0 ? from_time + s.rng.exponential(bound) : kInf;
  if (tprop < s.death_time) {
    queue_.push({tprop, slot, s.gen, kProposal});
  } else if (s.death_time < kInf) {
    queue_.push({s.death_time, slot, s.gen, kDeath});
  }
}

std::uint32_t Simulation::create_particle(double time, double level, std::uint64_t parent_id,
                                          std::uint32_t parent_slot, int type) {
  std::uint32_t slot;
  if (!free_slots_.empty()) {
    slot = free_slots_.back();
    free_slots_.pop_back();
  } else {
    slot = static_cast<std::uint32_t>(slots_.size());
    slots_.push_back({});
    coords_.resize(slots_.size() * static_cast<std::size_t>(std::max(0, model_.motion.dim)), 0.0);
  }
  Slot& s = slots_[slot];
  std::uint32_t keep_gen = s.gen;
  s = Slot{};
  s.gen = keep_gen;
  s.ref_level = level;
  s.ref_time = time;
  s.birth_time = time;
  s.loc_time = time;
  s.id = next_id_++;
  s.parent_id = parent_id;
  s.type = type;
  s.alive = true;
  s.rng = stream(s.id + kParticleStreamBase);
  int dim = model_.motion.dim;
  if (dim > 0) {
    double* c = &coords_[slot * static_cast<std::size_t>(dim)];
    if (parent_slot != kGlobalSlot) {
      const double* pc = &coords_[parent_slot * static_cast<std::size_t>(dim)];
      for (int i = 0; i < dim; ++i) c[i] = pc[i];
    } else if (model_.initial_location) {
      std::vector<double> loc(static_cast<std::size_t>(dim), 0.0);
      // Initial particles draw from the init stream, immigrants from the
      // immigration sampler's stream (handled by the caller via rng choice).
      model_.initial_location(parent_id == 0 && time == 0.0 ? init_rng_ : immigration_rng_, loc);
      for (int i = 0; i < dim; ++i) c[i] = loc[i];
    } else {
      for (int i = 0; i < dim; ++i) c[i] = 0.0;
    }
  }
  ++alive_;
  s.death_time = compute_death_time(slot);
  if (record_) record(EventRecord::Kind::birth, time, s, level);
  arm(slot, time);
  return slot;
}

void Simulation::record(EventRecord::Kind kind, double time, const Slot& s, double level) {
  EventRecord rec;
  rec.kind = kind;
  rec.time = time;
  rec.id = s.id;
  rec.parent_id = kind == EventRecord::Kind::birth ? s.parent_id : 0;
  rec.level = level;
  int dim = model_.motion.dim;
  if (dim > 0) {
    const double* c = &coords_[(&s - slots_.data()) * static_cast<std::size_t>(dim)];
    rec.location.assign(c, c + dim);
  }
  history_.push_back(std::move(rec));
}

void Simulation::sync_location(std::uint32_t slot, double t) {
  Slot& s = slots_[slot];
  int dim = model_.motion.dim;
  if (dim <= 0 || model_.motion.kind == MotionKind::frozen) {
    s.loc_time = t;
    return;
  }
  double dt = t - s.loc_time;
  if (dt <= 0.0) return;
  double sd = std::sqrt(model_.motion.sigma2 * dt);
  double* c = &coords_[slot * static_cast<std::size_t>(dim)];
  for (int i = 0; i < dim; ++i) c[i] += sd * s.rng.normal();
  s.loc_time = t;
}

void Simulation::kill(std::uint32_t slot, double time, EventRecord::Kind kind) {
  Slot& s = slots_[slot];
  if (record_) {
    sync_location(slot, time);
    record(kind, time, s, level_at(slot, time));
  }
  s.alive = false;
  ++s.gen;
  --alive_;
  free_slots_.push_back(slot);
}

void Simulation::spawn_from(std::uint32_t parent_slot, double time, double u) {
  Slot& parent = slots_[parent_slot];
  double r = model_.levels.r;
  if (model_.motion.dim > 0) sync_location(parent_slot, time);
  if (model_.multitype) {
    MultitypeBirth mb = multitype_birth(parent.type, u, *model_.multitype, r, parent.rng);
    if (mb.parent_level != u) {
      parent.ref_level = mb.parent_level;
      parent.ref_time = time;
      parent.death_time = compute_death_time(parent_slot);
    }
    create_particle(time, mb.child_level, parent.id, parent_slot, mb.child_type);
    return;
  }
  if (model_.level_law == LevelLaw::exponential) {
    double child = u + parent.rng.exponential(1.0 / r);
    create_particle(time, child, parent.id, parent_slot, parent.type);
    return;
  }
  double child = u + (r - u) * parent.rng.uniform();
  create_particle(time, child, parent.id, parent_slot, parent.type);
}

void Simulation::handle_proposal(const QEvent& ev) {
  Slot& s = slots_[ev.slot];
  if (!s.alive || s.gen != ev.gen) return;
  rebase_level(ev.slot, ev.time);
  double u = s.ref_level;
  double r = model_.levels.r;
  bool accepted = false;
  int kids = 1;
  if (!model_.offspring.empty()) {
    // Superposed per-k proposals: pick k in proportion to its bound
    // (k+1) a_k r, then accept with ((r-u)/r)^k.
    const auto& rates = model_.offspring.rates;
    double total = model_.offspring.proposal_rate(r);
    double pick = s.rng.uniform() * total;
    std::size_t idx = 0;
    double acc = 0.0;
    for (; idx < rates.size(); ++idx) {
      acc += static_cast<double>(idx + 2) * rates[idx] * r;
      if (pick < acc) break;
    }
    if (idx >= rates.size()) idx = rates.size() - 1;
    kids = static_cast<int>(idx + 1);
    accepted = s.rng.uniform() < std::pow((r - u) / r, static_cast<double>(kids));
  } else if (model_.level_law == LevelLaw::exponential) {
    accepted = s.rng.uniform() < std::exp(-u / r);
  } else if (model_.a_of_x) {
    sync_location(ev.slot, ev.time);
    const double* c = &coords_[ev.slot * static_cast<std::size_t>(model_.motion.dim)];
    std::vector<double> loc(c, c + model_.motion.dim);
    double ax = model_.a_of_x(loc);
    if (ax > model_.a_max + 1e-12)
      throw std::runtime_error("Simulation: a(x) exceeded the declared a_max");
    accepted = s.rng.uniform() * (model_.a_max * r) < ax * (r - u);
  } else if (model_.environment && !model_.environment->limit_mode) {
    double al = model_.environment->a[env_state_];
    accepted = s.rng.uniform() * (env_a_max_ * r) < al * (r - u);
  } else {
    accepted = s.rng.uniform() * r < (r - u);
  }
  if (accepted && u < r) {
    for (int kid = 0; kid < kids; ++kid) spawn_from(ev.slot, ev.time, slots_[ev.slot].ref_level);
  }
  arm(ev.slot, ev.time);
}

void Simulation::handle_immigration(double time) {
  const auto& spec = *model_.immigration;
  double level = immigration_rng_.uniform(0.0, model_.levels.r);
  int type = model_.initial_type ? model_.initial_type(immigration_rng_) : 0;
  std::uint32_t slot = create_particle(time, level, 0, kGlobalSlot, type);
  int dim = model_.motion.dim;
  if (dim > 0 && spec.location_sampler) {
    std::vector<double> loc(static_cast<std::size_t>(dim), 0.0);
    spec.location_sampler(immigration_rng_, loc);
    double* c = &coords_[slot * static_cast<std::size_t>(dim)];
    for (int i = 0; i < dim; ++i) c[i] = loc[i];
  }
  if (record_) {
    // Rewrite the auto-recorded birth as an immigration event.
    history_.back().kind = EventRecord::Kind::immigrate;
  }
  double rate = model_.levels.r * spec.total_rate_density;
  queue_.push({time + immigration_rng_.exponential(rate), kGlobalSlot, 0, kImmigration});
}

void Simulation::handle_catastrophe(double time) {
  const auto& spec = *model_.catastrophe;
  const auto& mark = spec.draw_mark(catastrophe_rng_);
  double r = model_.levels.r;
  cat_exposures_ += alive_;
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
    Slot& s = slots_[slot];
    if (!s.alive) continue;
    rebase_level(slot, time);
    double rho = mark.rho_by_type.empty() ? mark.rho
                                          : mark.rho_by_type[static_cast<std::size_t>(s.type)];
    s.ref_level *= rho;
    if (s.ref_level >= r) {
      kill(slot, time, EventRecord::Kind::catastrophe);
      ++cat_deaths_;
    } else {
      s.death_time = compute_death_time(slot);
    }
  }
  rearm_all(time);
  queue_.push({time + catastrophe_rng_.exponential(spec.event_rate), kGlobalSlot, 0,
               kCatastrophe});
}

void Simulation::handle_env_jump(double time) {
  const auto& spec = *model_.environment;
  // Freeze each level at the jump time under the old coefficients, then
  // switch regimes; flows are exact piecewise.
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot)
    if (slots_[slot].alive) rebase_level(slot, time);
  double q = -spec.q[env_state_][env_state_];
  double pick = env_rng_.uniform() * q;
  double acc = 0.0;
  int next = env_state_;
  for (std::size_t j = 0; j < spec.m(); ++j) {
    if (static_cast<int>(j) == env_state_) continue;
    acc += spec.q[env_state_][j];
    if (pick < acc) {
      next = static_cast<int>(j);
      break;
    }
  }
  env_state_ = next;
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
    Slot& s = slots_[slot];
    if (!s.alive) continue;
    s.death_time = compute_death_time(slot);
  }
  rearm_all(time);
  double qn = -spec.q[env_state_][env_state_];
  if (qn > 0.0)
    queue_.push({time + env_rng_.exponential(spec.speedup * qn), kGlobalSlot, 0, kEnvJump});
}

void Simulation::rearm_all(double time) {
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
    Slot& s = slots_[slot];
    if (!s.alive) continue;
    ++s.gen;
    arm(slot, time);
  }
}

void Simulation::extend_death_horizon(double t_target) {
  if (model_.offspring.empty() || grid_mode_) {
    death_horizon_ = t_target;
    return;
  }
  if (t_target <= death_horizon_) return;
  death_horizon_ = t_target;
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
    Slot& s = slots_[slot];
    if (!s.alive || s.death_time < kInf) continue;
    s.death_time = compute_death_time(slot);
    if (s.death_time < kInf) {
      ++s.gen;
      arm(slot, s.ref_time);
    }
  }
}

void Simulation::advance(double t_target) {
  if (!(t_target >= now_)) throw std::invalid_argument("advance: t_target must be >= now");
  if (grid_mode_) {
    advance_grid(t_target);
    return;
  }
  extend_death_horizon(t_target);
  while (!queue_.empty()) {
    QEvent ev = queue_.top();
    if (ev.time > t_target) break;
    queue_.pop();
    switch (ev.kind) {
      case kProposal:
        handle_proposal(ev);
        break;
      case kDeath: {
        Slot& s = slots_[ev.slot];
        if (s.alive && s.gen == ev.gen) kill(ev.slot, ev.time, EventRecord::Kind::death);
        break;
      }
      case kImmigration:
        handle_immigration(ev.time);
        break;
      case kCatastrophe:
        handle_catastrophe(ev.time);
        break;
      case kEnvJump:
        handle_env_jump(ev.time);
        break;
    }
  }
  now_ = t_target;
}

void Simulation::advance_grid(double t_target) {
  const bool env_limit = model_.environment && model_.environment->limit_mode;
  const double h = env_limit ? model_.environment->grid_step : model_.grid_step;
  const double r = model_.levels.r;
  const double abar = env_limit ? model_.environment->abar() : 0.0;
  const double cbar = env_limit ? model_.environment->cbar() : 0.0;
  while (true) {
    while (!queue_.empty() && queue_.top().time <= now_) {
      QEvent ev = queue_.top();
      queue_.pop();
      switch (ev.kind) {
        case kProposal:
          handle_proposal(ev);
          break;
        case kImmigration:
          handle_immigration(ev.time);
          break;
        case kCatastrophe:
          handle_catastrophe(ev.time);
          break;
        default:
          break;
      }
    }
    if (now_ >= t_target) break;
    double t_next = std::min(now_ + h, t_target);
    if (!queue_.empty()) t_next = std::min(t_next, queue_.top().time);
    double dt = t_next - now_;
    if (dt <= 0.0) {
      now_ = t_next;
      continue;
    }
    if (env_limit) {
      // One Gaussian increment shared by every particle in this step.
      double dW = std::sqrt(dt) * env_rng_.normal();
      for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
        Slot& s = slots_[slot];
        if (!s.alive) continue;
        double u = env_level_step(s.ref_level, dt, abar, cbar, dW);
        if (u >= r) {
          s.ref_level = u;
          s.ref_time = t_next;
          kill(slot, t_next, EventRecord::Kind::death);
        } else {
          s.ref_level = u;
          s.ref_time = t_next;
        }
      }
    } else {
      int dim = model_.motion.dim;
      for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
        Slot& s = slots_[slot];
        if (!s.alive) continue;
        std::vector<double> loc;
        if (dim > 0) {
          const double* c = &coords_[slot * static_cast<std::size_t>(dim)];
          loc.assign(c, c + dim);
        }
        double ax = model_.a_of_x ? model_.a_of_x(loc) : model_.levels.a;
        double bx = model_.b_of_x ? model_.b_of_x(loc) : model_.levels.b;
        auto drift = [ax, bx](double u) { return ax * u * u - bx * u; };
        double u = rk4_step(drift, s.ref_level, dt);
        if (u >= r) {
          double hit = rk4_hit_time(drift, s.ref_level, r, dt, dt);
          s.ref_level = r;
          s.ref_time = t_next;
          sync_location(slot, now_ + (hit == kInf ? dt : hit));
          kill(slot, now_ + (hit == kInf ? dt : hit), EventRecord::Kind::death);
        } else {
          s.ref_level = u;
          s.ref_time = t_next;
          sync_location(slot, t_next);
        }
      }
    }
    now_ = t_next;
  }
}

std::int64_t Simulation::observe_count(double k) const {
  if (!(k > 0.0 && k <= model_.levels.r) && model_.level_law != LevelLaw::exponential)
    throw std::invalid_argument("observe_count: requires 0 < K <= r");
  std::int64_t n = 0;
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot)
    if (slots_[slot].alive && level_at(slot, now_) < k) ++n;
  return n;
}

double Simulation::observe_normalized(double k,
                                      const std::function<double(const std::vector<double>&)>& f) {
  if (!(k > 0.0 && k <= model_.levels.r))
    throw std::invalid_argument("observe_normalized: requires 0 < K <= r");
  double s = 0.0;
  int dim = model_.motion.dim;
  std::vector<double> loc;
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
    if (!slots_[slot].alive || level_at(slot, now_) >= k) continue;
    if (dim > 0) {
      sync_location(slot, now_);
      const double* c = &coords_[slot * static_cast<std::size_t>(dim)];
      loc.assign(c, c + dim);
    }
    s += f(loc);
  }
  return s / k;
}

double Simulation::min_level() const {
  double m = kInf;
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot)
    if (slots_[slot].alive) m = std::min(m, level_at(slot, now_));
  return m;
}

std::vector<double> Simulation::levels_snapshot() const {
  std::vector<double> out;
  out.reserve(alive_);
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot)
    if (slots_[slot].alive) out.push_back(level_at(slot, now_));
  return out;
}

std::vector<std::int64_t> Simulation::type_counts() const {
  std::size_t m = model_.multitype ? model_.multitype->m() : 1;
  std::vector<std::int64_t> out(m, 0);
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot)
    if (slots_[slot].alive) ++out[static_cast<std::size_t>(slots_[slot].type)];
  return out;
}

std::vector<std::vector<double>> Simulation::locations_snapshot() {
  std::vector<std::vector<double>> out;
  int dim = model_.motion.dim;
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
    if (!slots_[slot].alive) continue;
    sync_location(slot, now_);
    const double* c = dim > 0 ? &coords_[slot * static_cast<std::size_t>(dim)] : nullptr;
    out.emplace_back(c, c + dim);
  }
  return out;
}

const std::vector<EventRecord>& Simulation::history() const {
  if (!record_) throw std::logic_error("Simulation: history recording is off");
  return history_;
}

Simulation::AncestorQuery Simulation::ancestors_at(double t, double T) const {
  if (!record_) throw std::logic_error("ancestors_at: history recording is off");
  if (!(t >= 0.0 && t < T && T <= now_))
    throw std::invalid_argument("ancestors_at: requires 0 <= t < T <= simulated horizon");
  if (model_.multitype || model_.environment || model_.catastrophe || model_.a_of_x ||
      !model_.offspring.empty() || model_.level_law != LevelLaw::uniform)
    throw std::invalid_argument("ancestors_at: supported for constant-coefficient models only");
  double barrier = ceiling_hit_barrier(T - t, model_.levels);
  AncestorQuery out{0, {}};
  // Levels of particles alive at t, reconstructed from birth records.
  std::unordered_map<std::uint64_t, double> death_at;
  for (const auto& rec : history_)
    if (rec.kind != EventRecord::Kind::birth && rec.kind != EventRecord::Kind::immigrate)
      death_at[rec.id] = rec.time;
  for (const auto& rec : history_) {
    if (rec.kind != EventRecord::Kind::birth && rec.kind != EventRecord::Kind::immigrate) continue;
    if (rec.time > t) continue;
    auto it = death_at.find(rec.id);
    if (it != death_at.end() && it->second <= t) continue;
    double level = level_flow(rec.level, t - rec.time, model_.levels);
    if (level < barrier) out.ids.push_back(rec.id);
  }
  std::sort(out.ids.begin(), out.ids.end());
  out.count = static_cast<std::int64_t>(out.ids.size());
  return out;
}

Simulation::AncestorQuery Simulation::ancestors_by_parent_pointers(double t, double T) const {
  if (!record_) throw std::logic_error("ancestors_by_parent_pointers: history recording is off");
  std::unordered_map<std::uint64_t, double> death_at;
  std::unordered_map<std::uint64_t, std::pair<double, std::uint64_t>> birth_of;  // time, parent
  for (const auto& rec : history_) {
    if (rec.kind == EventRecord::Kind::birth || rec.kind == EventRecord::Kind::immigrate)
      birth_of[rec.id] = {rec.time, rec.parent_id};
    else
      death_at[rec.id] = rec.time;
  }
  auto alive_at = [&](std::uint64_t id, double when) {
    auto bi = birth_of.find(id);
    if (bi == birth_of.end() || bi->second.first > when) return false;
    auto di = death_at.find(id);
    return di == death_at.end() || di->second > when;
  };
  AncestorQuery out{0, {}};
  std::vector<std::uint64_t> seen;
  for (const auto& [id, bt] : birth_of) {
    if (!alive_at(id, T)) continue;
    std::uint64_t cur = id;
    while (birth_of[cur].first > t) {
      cur = birth_of[cur].second;
      if (cur == 0) break;
    }
    if (cur != 0 && alive_at(cur, t)) seen.push_back(cur);
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  out.ids = std::move(seen);
  out.count = static_cast<std::int64_t>(out.ids.size());
  return out;
}

}  // namespace levelsim
