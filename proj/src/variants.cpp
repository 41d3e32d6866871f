#include "levelsim/variants.hpp"

#include <cmath>
#include <stdexcept>

#include "levelsim/engine.hpp"

namespace levelsim {

void ImmigrationSpec::validate() const {
  if (!(total_rate_density >= 0.0))
    throw std::invalid_argument("ImmigrationSpec: total_rate_density must be >= 0");
}

double MultitypeSpec::a_of(std::size_t type) const {
  double s = 0.0;
  for (double v : a[type]) s += v;
  return s;
}

double MultitypeSpec::max_a() const {
  double s = 0.0;
  for (std::size_t i = 0; i < m(); ++i) s = std::max(s, a_of(i));
  return s;
}

namespace {
// Strong connectivity of the positive-rate graph (irreducibility).
bool strongly_connected(const std::vector<std::vector<double>>& w) {
  std::size_t m = w.size();
  auto reach = [&](bool transpose) {
    std::vector<bool> seen(m, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < m; ++j) {
        double v = transpose ? w[j][i] : w[i][j];
        if (i != j && v > 0.0 && !seen[j]) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
    for (bool s : seen)
      if (!s) return false;
    return true;
  };
  return reach(false) && reach(true);
}
}  // namespace

void MultitypeSpec::validate(double r) const {
  std::size_t mm = m();
  if (mm == 0 || a.size() != mm) throw std::invalid_argument("MultitypeSpec: bad dimensions");
  for (const auto& row : a) {
    if (row.size() != mm) throw std::invalid_argument("MultitypeSpec: a must be m x m");
    for (double v : row)
      if (!(v >= 0.0)) throw std::invalid_argument("MultitypeSpec: a must be nonnegative");
  }
  if (mm > 1 && !strongly_connected(a))
    throw std::invalid_argument("MultitypeSpec: the type chain must be irreducible");
  for (std::size_t i = 0; i < mm; ++i)
    if (!(r * a_of(i) - b[i] >= 0.0))
      throw std::invalid_argument("MultitypeSpec: requires r*a(type) - b(type) >= 0");
}

MultitypeBirth multitype_birth(int parent_type, double parent_level, const MultitypeSpec& spec,
                               double r, RngStream& rng) {
  std::size_t pt = static_cast<std::size_t>(parent_type);
  double total = spec.a_of(pt);
  double pick = rng.uniform() * total;
  std::size_t j = spec.m() - 1;
  double acc = 0.0;
  for (std::size_t cand = 0; cand < spec.m(); ++cand) {
    acc += spec.a[pt][cand];
    if (pick < acc) {
      j = cand;
      break;
    }
  }
  double v = parent_level + (r - parent_level) * rng.uniform();
  bool swap = rng.uniform() < 0.5;
  MultitypeBirth out;
  out.swapped = swap;
  out.child_type = static_cast<int>(j);
  if (swap) {
    out.parent_level = v;
    out.child_level = parent_level;
  } else {
    out.parent_level = parent_level;
    out.child_level = v;
  }
  return out;
}

void CatastropheSpec::validate() const {
  if (!(event_rate >= 0.0) || !std::isfinite(event_rate))
    throw std::invalid_argument("CatastropheSpec: event_rate must be finite and >= 0");
  if (marks.empty()) throw std::invalid_argument("CatastropheSpec: needs at least one mark");
  double tot = 0.0;
  for (const auto& mk : marks) {
    if (!(mk.prob >= 0.0)) throw std::invalid_argument("CatastropheSpec: mark prob must be >= 0");
    tot += mk.prob;
    if (mk.rho_by_type.empty()) {
      if (!(mk.rho >= 1.0)) throw std::invalid_argument("CatastropheSpec: rho must be >= 1");
    } else {
      for (double v : mk.rho_by_type)
        if (!(v >= 1.0)) throw std::invalid_argument("CatastropheSpec: rho must be >= 1");
    }
  }
  if (std::fabs(tot - 1.0) > 1e-9)
    throw std::invalid_argument("CatastropheSpec: mark probabilities must sum to 1");
}

const CatastropheSpec::Mark& CatastropheSpec::draw_mark(RngStream& rng) const {
  double pick = rng.uniform();
  double acc = 0.0;
  for (const auto& mk : marks) {
    acc += mk.prob;
    if (pick < acc) return mk;
  }
  return marks.back();
}

std::vector<double> solve_linear(std::vector<std::vector<double>> m, std::vector<double> y) {
  std::size_t n = y.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t row = col + 1; row < n; ++row)
      if (std::fabs(m[row][col]) > std::fabs(m[piv][col])) piv = row;
    if (std::fabs(m[piv][col]) < 1e-14) throw std::invalid_argument("solve_linear: singular system");
    std::swap(m[col], m[piv]);
    std::swap(y[col], y[piv]);
    for (std::size_t row = 0; row < n; ++row) {
      if (row == col) continue;
      double f = m[row][col] / m[col][col];
      for (std::size_t k = col; k < n; ++k) m[row][k] -= f * m[col][k];
      y[row] -= f * y[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / m[i][i];
  return x;
}

void EnvironmentSpec::validate() const {
  std::size_t mm = m();
  if (mm == 0 || b.size() != mm || q.size() != mm)
    throw std::invalid_argument("EnvironmentSpec: bad dimensions");
  for (std::size_t i = 0; i < mm; ++i) {
    if (q[i].size() != mm) throw std::invalid_argument("EnvironmentSpec: Q must be m x m");
    double row = 0.0;
    for (std::size_t j = 0; j < mm; ++j) {
      if (i != j && !(q[i][j] >= 0.0))
        throw std::invalid_argument("EnvironmentSpec: off-diagonal Q entries must be >= 0");
      row += q[i][j];
    }
    if (std::fabs(row) > 1e-12)
      throw std::invalid_argument("EnvironmentSpec: Q rows must sum to 0");
    if (!(a[i] >= 0.0)) throw std::invalid_argument("EnvironmentSpec: a(l) must be >= 0");
  }
  if (mm > 1 && !strongly_connected(q))
    throw std::invalid_argument("EnvironmentSpec: the chain must be irreducible");
  if (!(speedup > 0.0)) throw std::invalid_argument("EnvironmentSpec: speedup must be > 0");
  auto pi = stationary();
  double dot = 0.0;
  for (std::size_t l = 0; l < mm; ++l) dot += pi[l] * b[l];
  if (std::fabs(dot) > 1e-12)
    throw std::invalid_argument("EnvironmentSpec: requires sum_l pi(l) b(l) = 0");
  if (!(cbar() >= -1e-12)) throw std::invalid_argument("EnvironmentSpec: cbar must be >= 0");
  if (limit_mode) {
    if (!(lambda_max > 0.0))
      throw std::invalid_argument("EnvironmentSpec: limit mode needs lambda_max > 0");
    if (!(grid_step > 0.0))
      throw std::invalid_argument("EnvironmentSpec: grid_step must be > 0");
  }
}

std::vector<double> EnvironmentSpec::stationary() const {
  // pi Q = 0 with sum pi = 1: replace the last column of Q^T by ones.
  std::size_t mm = m();
  if (mm == 1) return {1.0};
  std::vector<std::vector<double>> mtx(mm, std::vector<double>(mm, 0.0));
  std::vector<double> rhs(mm, 0.0);
  for (std::size_t i = 0; i < mm; ++i)
    for (std::size_t j = 0; j < mm; ++j) mtx[i][j] = q[j][i];
  for (std::size_t j = 0; j < mm; ++j) mtx[mm - 1][j] = 1.0;
  rhs[mm - 1] = 1.0;
  return solve_linear(mtx, rhs);
}

std::vector<double> EnvironmentSpec::h0() const {
  // Q h0 = b is determined up to an additive constant; pin h0(m-1) = 0 by
  // replacing the last row with that constraint (consistent since
  // sum pi b = 0).
  std::size_t mm = m();
  std::vector<std::vector<double>> mtx = q;
  std::vector<double> rhs = b;
  for (std::size_t j = 0; j < mm; ++j) mtx[mm - 1][j] = (j == mm - 1) ? 1.0 : 0.0;
  rhs[mm - 1] = 0.0;
  return solve_linear(mtx, rhs);
}

double EnvironmentSpec::abar() const {
  auto pi = stationary();
  double s = 0.0;
  for (std::size_t l = 0; l < m(); ++l) s += pi[l] * a[l];
  return s;
}

double EnvironmentSpec::cbar() const {
  auto pi = stationary();
  auto h = h0();
  double s = 0.0;
  for (std::size_t l = 0; l < m(); ++l) s += pi[l] * h[l] * b[l];
  return -s;
}

Model condition_nonextinction(const Model& base) {
  Model out = base;
  if (!(base.levels.b <= 0.0))
    throw std::invalid_argument("condition_nonextinction: requires b <= 0");
  out.immortal_zero_particle = true;
  return out;
}

Model condition_extinction(const Model& base) {
  const LevelParams& p = base.levels;
  if (!(p.a > 0.0 && p.b > 0.0 && p.b < p.r * p.a))
    throw std::invalid_argument("condition_extinction: requires 0 < b < r*a");
  Model out = base;
  out.levels.a = p.a;
  out.levels.b = -p.b;
  out.levels.r = p.r - p.b / p.a;
  return out;
}

}  // namespace levelsim
