#include "laq/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "laq/rng.hpp"

namespace laq {

namespace {

constexpr double kVarianceFloor = 1e-6;
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<double> band_samples(const Volume& vol, const LabelMask& band) {
  if (!vol.grid().same_geometry(band.grid()))
    throw std::invalid_argument("baseline: volume/band dimension mismatch");
  std::vector<double> s;
  for (std::size_t i = 0; i < band.size(); ++i)
    if (band[i]) s.push_back(vol[i]);
  return s;
}

int bin_of(double v, double lo, double hi) {
  const int b = static_cast<int>((v - lo) / (hi - lo) * 256.0);
  return std::clamp(b, 0, 255);
}

double log_likelihood(const std::vector<double>& samples, const GmmParams& g) {
  double ll = 0.0;
  for (double x : samples) {
    double px = 0.0;
    for (int k = 0; k < g.K; ++k) {
      const double d = x - g.mean[k];
      px += g.weight[k] / std::sqrt(kTwoPi * g.variance[k]) *
            std::exp(-0.5 * d * d / g.variance[k]);
    }
    ll += std::log(std::max(px, std::numeric_limits<double>::min()));
  }
  return ll;
}

}  // namespace

int otsu_threshold(const std::array<std::uint64_t, 256>& histogram) {
  double total = 0.0, total_sum = 0.0;
  for (int b = 0; b < 256; ++b) {
    total += static_cast<double>(histogram[b]);
    total_sum += static_cast<double>(b) * static_cast<double>(histogram[b]);
  }

  double w0 = 0.0, s0 = 0.0, best = -1.0;
  int best_cut = -1;
  for (int t = 0; t < 255; ++t) {
    w0 += static_cast<double>(histogram[t]);
    s0 += static_cast<double>(t) * static_cast<double>(histogram[t]);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = s0 / w0;
    const double mu1 = (total_sum - s0) / w1;
    const double sigma = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (sigma > best) {  // strict: ties keep the lowest cut
      best = sigma;
      best_cut = t;
    }
  }
  if (best_cut < 0) throw std::invalid_argument("otsu_threshold: histogram mass in fewer than 2 bins");
  return best_cut;
}

SurfaceLabeling otsu_scar(const Volume& vol, const LabelMask& band, const LabelMask& la_mask,
                          double d_max) {
  const std::vector<double> samples = band_samples(vol, band);
  if (samples.empty()) throw std::invalid_argument("otsu_scar: empty band");

  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it, hi = *hi_it;
  if (lo == hi) {
    std::array<std::uint64_t, 256> degenerate{};
    degenerate[0] = samples.size();
    otsu_threshold(degenerate);  // throws the canonical error
  }

  std::array<std::uint64_t, 256> hist{};
  for (double v : samples) ++hist[bin_of(v, lo, hi)];
  const int cut = otsu_threshold(hist);

  LabelMask scar(band.grid());
  for (std::size_t i = 0; i < band.size(); ++i)
    if (band[i] && bin_of(vol[i], lo, hi) > cut) scar[i] = 1;
  return project_to_surface(scar, la_mask, d_max);
}

GmmParams em_fit(const std::vector<double>& samples, int K, std::uint64_t seed, int max_iter,
                 double tol, double jitter) {
  if (K < 2) throw std::invalid_argument("em_fit: K must be >= 2");
  if (samples.size() < static_cast<std::size_t>(10 * K))
    throw std::invalid_argument("em_fit: need at least 10*K samples");
  if (max_iter < 1) throw std::invalid_argument("em_fit: max_iter must be >= 1");

  const std::size_t n = samples.size();
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());

  GmmParams g;
  g.K = K;
  g.weight.resize(K);
  g.mean.resize(K);
  g.variance.resize(K);

  Rng rng(seed);
  for (int k = 0; k < K; ++k) {
    const std::size_t beg = n * static_cast<std::size_t>(k) / static_cast<std::size_t>(K);
    const std::size_t end = n * static_cast<std::size_t>(k + 1) / static_cast<std::size_t>(K);
    const std::size_t m = end - beg;
    double mean = 0.0;
    for (std::size_t i = beg; i < end; ++i) mean += sorted[i];
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t i = beg; i < end; ++i) var += (sorted[i] - mean) * (sorted[i] - mean);
    var /= static_cast<double>(m);
    if (jitter > 0.0) mean += jitter * rng.normal();
    g.weight[k] = static_cast<double>(m) / static_cast<double>(n);
    g.mean[k] = mean;
    g.variance[k] = std::max(var, kVarianceFloor);
  }

  double ll_prev = log_likelihood(samples, g);
  g.log_likelihood.push_back(ll_prev);

  std::vector<double> resp(static_cast<std::size_t>(K));
  std::vector<double> nk(static_cast<std::size_t>(K));
  std::vector<double> sum(static_cast<std::size_t>(K));
  std::vector<double> sq(static_cast<std::size_t>(K));

  for (int iter = 0; iter < max_iter; ++iter) {
    std::fill(nk.begin(), nk.end(), 0.0);
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(sq.begin(), sq.end(), 0.0);

    for (double x : samples) {
      double norm = 0.0;
      for (int k = 0; k < K; ++k) {
        const double d = x - g.mean[k];
        resp[k] = g.weight[k] / std::sqrt(kTwoPi * g.variance[k]) *
                  std::exp(-0.5 * d * d / g.variance[k]);
        norm += resp[k];
      }
      if (norm <= 0.0) norm = std::numeric_limits<double>::min();
      for (int k = 0; k < K; ++k) {
        const double r = resp[k] / norm;
        nk[k] += r;
        sum[k] += r * x;
        sq[k] += r * x * x;
      }
    }

    GmmParams next = g;
    for (int k = 0; k < K; ++k) {
      if (nk[k] <= 0.0) continue;  // starved component keeps its parameters
      next.weight[k] = nk[k] / static_cast<double>(n);
      next.mean[k] = sum[k] / nk[k];
      next.variance[k] = std::max(sq[k] / nk[k] - next.mean[k] * next.mean[k], kVarianceFloor);
    }

    const double ll = log_likelihood(samples, next);
    if (ll < ll_prev) break;  // numerical regression, keep the better fit
    g.weight = next.weight;
    g.mean = next.mean;
    g.variance = next.variance;
    g.log_likelihood.push_back(ll);
    const double gain = ll - ll_prev;
    ll_prev = ll;
    if (gain < tol) break;
  }
  return g;
}

SurfaceLabeling mgmm_scar(const Volume& vol, const LabelMask& band, const LabelMask& la_mask, int K,
                          int n_scar_components, double d_max, std::uint64_t seed, int max_iter,
                          double tol, double jitter) {
  if (n_scar_components < 1 || n_scar_components > K)
    throw std::invalid_argument("mgmm_scar: n_scar_components must be in [1, K]");

  const std::vector<double> samples = band_samples(vol, band);
  const GmmParams g = em_fit(samples, K, seed, max_iter, tol, jitter);

  // Components ranked by mean; the top n_scar_components are scar.
  std::vector<int> order(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return g.mean[a] > g.mean[b]; });
  std::vector<bool> is_scar(static_cast<std::size_t>(K), false);
  for (int r = 0; r < n_scar_components; ++r) is_scar[order[r]] = true;

  LabelMask scar(band.grid());
  for (std::size_t i = 0; i < band.size(); ++i) {
    if (!band[i]) continue;
    const double x = vol[i];
    double best = -1.0;
    int best_k = 0;
    for (int k = 0; k < K; ++k) {
      const double d = x - g.mean[k];
      const double post = g.weight[k] / std::sqrt(kTwoPi * g.variance[k]) *
                          std::exp(-0.5 * d * d / g.variance[k]);
      if (post > best) {  // ties keep the lowest component index
        best = post;
        best_k = k;
      }
    }
    if (is_scar[best_k]) scar[i] = 1;
  }
  return project_to_surface(scar, la_mask, d_max);
}

}  // namespace laq
