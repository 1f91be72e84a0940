#include "jfsce/equalizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>

#include "jfsce/kernels.hpp"

namespace jfsce {

namespace {

std::span<const cplx> span_of(const CVector& v, Eigen::Index from, Eigen::Index count) {
  return {v.data() + from, static_cast<std::size_t>(count)};
}

// Normal-equation data shared by every delay: the Hermitian Toeplitz
// R = H H^H + sigma^2 I, described by its first column.
struct Problem {
  const CVector& h;
  int n = 0;
  int len = 0;
  double noise = 0.0;
  CVector first_col;  // R(k, 0) for k = 0 .. N - 1

  Problem(const CVector& channel, int num_taps, double noise_variance)
      : h(channel), n(num_taps), len(static_cast<int>(channel.size())), noise(noise_variance) {
    if (num_taps < 1) throw ParameterError("equalizer needs at least one tap");
    if (len < 1 || channel.isZero(0.0)) throw ParameterError("equalizer channel estimate is all zero");
    if (noise_variance < 0.0) throw ParameterError("noise variance must be non-negative");
    // R(a, b) = sum_i h[i] conj(h[i + (a - b)]).
    first_col = CVector::Zero(n);
    for (int d = 0; d < std::min(n, len); ++d)
      first_col[d] = kernels::dotc(span_of(h, 0, len - d), span_of(h, d, len - d));
    first_col[0] += noise;
  }

  cplx r(int a, int b) const { return a >= b ? first_col[a - b] : std::conj(first_col[b - a]); }

  CMatrix dense() const {
    CMatrix R(n, n);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) R(a, b) = r(a, b);
    return R;
  }

  // Column `delay` of H: h_delay(k) = h[delay - k].
  CVector column(int delay) const {
    CVector c = CVector::Zero(n);
    for (int k = 0; k < n; ++k) {
      const int i = delay - k;
      if (i >= 0 && i < len) c[k] = h[i];
    }
    return c;
  }

  int max_delay() const { return n + len - 2; }
};

std::pair<int, int> delay_window(const Problem& p, int prune_length) {
  if (p.len <= prune_length) return {0, p.max_delay()};
  const RVector energy = p.h.cwiseAbs2();
  const double total = energy.sum();
  double acc = 0.0;
  int lo = 0, hi = p.len - 1;
  bool have_lo = false;
  for (int i = 0; i < p.len; ++i) {
    acc += energy[i];
    if (!have_lo && acc >= 0.01 * total) {
      lo = i;
      have_lo = true;
    }
    if (acc >= 0.99 * total) {
      hi = i;
      break;
    }
  }
  return {lo, std::min(hi + p.n - 1, p.max_delay())};
}

struct DenseSolver {
  Eigen::LLT<CMatrix> llt;
  bool jittered = false;

  explicit DenseSolver(const Problem& p) {
    CMatrix R = p.dense();
    llt.compute(R);
    if (llt.info() != Eigen::Success) {
      R.diagonal().array() += 1e-12 * R.diagonal().real().mean();
      llt.compute(R);
      jittered = true;
    }
  }

  // Design MSE for each delay in [lo, hi].
  RVector mse(const Problem& p, int lo, int hi) const {
    const int count = hi - lo + 1;
    CMatrix cols(p.n, count);
    for (int d = 0; d < count; ++d) cols.col(d) = p.column(lo + d);
    llt.matrixL().solveInPlace(cols);
    return (1.0 - cols.colwise().squaredNorm().array()).matrix().transpose();
  }

  EqualizerDesign design(const Problem& p, int delay) const {
    EqualizerDesign out;
    out.num_taps = p.n;
    out.delay = delay;
    const CVector hd = p.column(delay);
    const CVector v = llt.solve(hd);
    out.w = v.conjugate();
    out.active.resize(static_cast<std::size_t>(p.n));
    std::iota(out.active.begin(), out.active.end(), 0);
    out.design_mse = 1.0 - hd.dot(v).real();
    out.jittered = jittered;
    return out;
  }
};

struct GreedyPath {
  std::vector<int> active;    // in selection order
  std::vector<double> mse;    // design MSE after each selection
  CVector w;                  // taps for the full path
  bool jittered = false;
};

// Forward selection on the normal equations at one delay. Keeps, for every
// candidate tap j, g_j = L^-1 R(S, j) with L the Cholesky factor of R(S, S),
// the Schur complement s_j = R(j, j) - ||g_j||^2 and the residual correlation
// b_j = h_j - g_j^H z with z = L^-1 h_S. Adding j lowers the MSE by |b_j|^2 / s_j.
GreedyPath greedy_path(const Problem& p, int delay, int budget) {
  const int n = p.n;
  const CVector hd = p.column(delay);
  const double diag = p.first_col[0].real();
  const double floor = 1e-12 * std::max(diag, 1e-300);

  CMatrix G = CMatrix::Zero(n, budget);
  RVector schur = RVector::Constant(n, diag);
  CVector resid = hd;
  CVector z(budget);
  RVector lt(budget);
  std::vector<char> used(static_cast<std::size_t>(n), 0);

  GreedyPath path;
  double mse = 1.0;
  for (int step = 0; step < budget; ++step) {
    int best = -1;
    double best_gain = -1.0;
    for (int j = 0; j < n; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double gain = std::norm(resid[j]) / std::max(schur[j], floor);
      if (gain > best_gain) {
        best_gain = gain;
        best = j;
      }
    }
    if (schur[best] < floor) path.jittered = true;
    const double l = std::sqrt(std::max(schur[best], floor));
    lt[step] = l;
    z[step] = resid[best] / l;
    mse -= std::norm(z[step]);

    const CVector gt = G.row(best).head(step).transpose();
    CVector cross = CVector::Zero(n);
    if (step > 0) cross = G.leftCols(step) * gt.conjugate();
    for (int j = 0; j < n; ++j) {
      const cplx c = (p.r(best, j) - cross[j]) / l;
      G(j, step) = c;
      schur[j] -= std::norm(c);
      resid[j] -= std::conj(c) * z[step];
    }
    used[static_cast<std::size_t>(best)] = 1;
    path.active.push_back(best);
    path.mse.push_back(mse);
  }

  // Rebuild the Cholesky factor of R(S, S) in selection order and back-solve.
  const int s = static_cast<int>(path.active.size());
  CMatrix L = CMatrix::Zero(s, s);
  for (int i = 0; i < s; ++i) {
    const int t = path.active[static_cast<std::size_t>(i)];
    for (int j = 0; j < i; ++j) L(i, j) = std::conj(G(t, j));
    L(i, i) = lt[i];
  }
  const CVector v = L.adjoint().triangularView<Eigen::Upper>().solve(z.head(s));
  path.w = CVector::Zero(n);
  for (int i = 0; i < s; ++i) path.w[path.active[static_cast<std::size_t>(i)]] = std::conj(v[i]);
  return path;
}

EqualizerDesign from_path(const Problem& p, int delay, GreedyPath&& path) {
  EqualizerDesign out;
  out.num_taps = p.n;
  out.delay = delay;
  out.w = std::move(path.w);
  out.active = std::move(path.active);
  std::sort(out.active.begin(), out.active.end());
  out.design_mse = path.mse.empty() ? 1.0 : path.mse.back();
  out.jittered = path.jittered;
  return out;
}

// Delays for greedy selection: the best `count` by dense MSE, ascending.
std::vector<int> greedy_candidates(const RVector& dense_mse, int lo, int count) {
  std::vector<int> order(static_cast<std::size_t>(dense_mse.size()));
  std::iota(order.begin(), order.end(), 0);
  if (count > 0 && count < static_cast<int>(order.size())) {
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return dense_mse[a] < dense_mse[b]; });
    order.resize(static_cast<std::size_t>(count));
    std::sort(order.begin(), order.end());
  }
  for (int& d : order) d += lo;
  return order;
}

void check_budget(int budget, int num_taps) {
  if (budget < 1 || budget > num_taps)
    throw ParameterError("equalizer tap budget must lie in [1, N]");
}

}  // namespace

EqualizerDesign design_mmse_equalizer(const CVector& channel, int num_taps, double noise_variance,
                                      int budget, const EqualizerOptions& options) {
  const Problem p(channel, num_taps, noise_variance);
  check_budget(budget, num_taps);
  const auto [lo, hi] = delay_window(p, options.prune_length);
  const DenseSolver dense(p);
  const RVector mse = dense.mse(p, lo, hi);

  if (budget == num_taps) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < mse.size(); ++i)
      if (mse[i] < mse[best]) best = i;
    return dense.design(p, lo + static_cast<int>(best));
  }

  EqualizerDesign best;
  bool have = false;
  for (int d : greedy_candidates(mse, lo, options.greedy_delay_candidates)) {
    EqualizerDesign cand = from_path(p, d, greedy_path(p, d, budget));
    if (!have || cand.design_mse < best.design_mse) {
      best = std::move(cand);
      have = true;
    }
  }
  return best;
}

EqualizerDesign design_mmse_equalizer_at(const CVector& channel, int num_taps, double noise_variance,
                                         int budget, int delay) {
  const Problem p(channel, num_taps, noise_variance);
  check_budget(budget, num_taps);
  if (delay < 0 || delay > p.max_delay())
    throw ParameterError("equalizer delay must lie in [0, N + len - 2]");
  if (budget == num_taps) return DenseSolver(p).design(p, delay);
  return from_path(p, delay, greedy_path(p, delay, budget));
}

std::vector<double> design_mse_by_budget(const CVector& channel, int num_taps, double noise_variance,
                                         int max_budget, const EqualizerOptions& options) {
  const Problem p(channel, num_taps, noise_variance);
  check_budget(max_budget, num_taps);
  const auto [lo, hi] = delay_window(p, options.prune_length);
  const DenseSolver dense(p);
  const RVector mse = dense.mse(p, lo, hi);

  const int greedy_len = std::min(max_budget, num_taps - 1);
  std::vector<double> out(static_cast<std::size_t>(max_budget), 1.0);
  bool first = true;
  if (greedy_len > 0) {
    for (int d : greedy_candidates(mse, lo, options.greedy_delay_candidates)) {
      const GreedyPath path = greedy_path(p, d, greedy_len);
      for (int b = 0; b < greedy_len; ++b)
        out[static_cast<std::size_t>(b)] =
            first ? path.mse[static_cast<std::size_t>(b)]
                  : std::min(out[static_cast<std::size_t>(b)], path.mse[static_cast<std::size_t>(b)]);
      first = false;
    }
  }
  if (max_budget == num_taps) out.back() = mse.minCoeff();
  return out;
}

CVector equalize(const EqualizerDesign& design, const CVector& y) {
  const Eigen::Index n = y.size();
  CVector out = CVector::Zero(n);
  for (int k : design.active) {
    if (k >= n) continue;
    kernels::axpy(design.w[k], span_of(y, 0, n - k), {out.data() + k, static_cast<std::size_t>(n - k)});
  }
  return out;
}

double evaluate_symbol_mse(const EqualizerDesign& design, const CVector& y, const CVector& x,
                           Eigen::Index begin, Eigen::Index end) {
  const Eigen::Index need = std::max<Eigen::Index>(design.num_taps - 1, design.delay);
  if (end <= begin) throw WindowError("empty evaluation range");
  if (begin < need)
    throw WindowError("evaluation starts at " + std::to_string(begin) + " but needs " +
                      std::to_string(need) + " samples of context");
  if (end > y.size() || end > x.size())
    throw WindowError("evaluation range runs past the end of the streams");

  const Eigen::Index count = end - begin;
  CVector soft = CVector::Zero(count);
  std::span<cplx> dst(soft.data(), static_cast<std::size_t>(count));
  for (int k : design.active) kernels::axpy(design.w[k], span_of(y, begin - k, count), dst);
  soft -= x.segment(begin - design.delay, count);
  return kernels::norm2(std::span<const cplx>(soft.data(), static_cast<std::size_t>(count))) /
         static_cast<double>(count);
}

double evaluate_symbol_mse(const EqualizerDesign& design, const CVector& y, const CVector& x) {
  const Eigen::Index begin = std::max<Eigen::Index>(design.num_taps - 1, design.delay);
  return evaluate_symbol_mse(design, y, x, begin, std::min(y.size(), x.size()));
}

CVector slice_qpsk(const CVector& soft) {
  const double a = 1.0 / std::sqrt(2.0);
  CVector out(soft.size());
  for (Eigen::Index i = 0; i < soft.size(); ++i)
    out[i] = cplx(soft[i].real() >= 0.0 ? a : -a, soft[i].imag() >= 0.0 ? a : -a);
  return out;
}

}  // namespace jfsce
