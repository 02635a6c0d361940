#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <unordered_set>

#include "cptt/bench.hpp"

namespace cptt {

void RandomFunctionSpec::validate() const {
  if (d < 1) throw ArgumentError("random function order must be at least 1");
  if (!(beta > 0.0)) throw ArgumentError("beta must be positive");
  if (n_points < 1) throw ArgumentError("n_points must be at least 1");
  if (lmax < 1) throw ArgumentError("lmax must be at least 1");
  if (term_budget < 1) throw ArgumentError("term_budget must be at least 1");
}

std::vector<double> midpoint_grid(Index n) {
  std::vector<double> x(n);
  for (Index j = 0; j < n; ++j) x[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
  return x;
}

double trig_amplitude(double alpha, std::span<const Index> wave_numbers, double beta) {
  double sq = 0.0;
  for (Index k : wave_numbers) sq += static_cast<double>(k) * static_cast<double>(k);
  return alpha / std::pow(std::sqrt(sq), beta);
}

namespace {

// Floyd's algorithm: `count` distinct values from [0, total), returned sorted.
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t total, std::uint64_t count,
                                                      std::mt19937_64& rng) {
  std::vector<std::uint64_t> picked;
  if (count >= total) {
    picked.resize(total);
    for (std::uint64_t i = 0; i < total; ++i) picked[i] = i;
    return picked;
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(count * 2);
  for (std::uint64_t j = total - count; j < total; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    const std::uint64_t t = pick(rng);
    if (!seen.insert(t).second) seen.insert(j);
  }
  picked.assign(seen.begin(), seen.end());
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace

RandomFunction gen_random_function(const RandomFunctionSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  RandomFunction out;
  out.metadata.seed = spec.seed;
  std::uniform_int_distribution<Index> pick_l(1, spec.lmax);
  std::uint64_t total = 1;
  for (Index i = 0; i < spec.d; ++i) {
    const Index l = pick_l(rng);
    out.metadata.l_values.push_back(l);
    if (total > std::numeric_limits<std::uint64_t>::max() / l) {
      throw ArgumentError("multi-index count overflows 64 bits");
    }
    total *= l;
  }
  out.metadata.total_multi_indices = total;

  const std::vector<std::uint64_t> flat = sample_without_replacement(total, spec.term_budget, rng);
  out.metadata.retained_terms = flat.size();

  // sin(pi k x) on the midpoint grid, normalized, for every k <= lmax.
  const std::vector<double> x = midpoint_grid(spec.n_points);
  const auto n = static_cast<Eigen::Index>(spec.n_points);
  std::vector<Vector> unit_sines(spec.lmax + 1);
  std::vector<double> sine_norms(spec.lmax + 1, 0.0);
  for (Index k = 1; k <= spec.lmax; ++k) {
    Vector s(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      s(j) = std::sin(std::numbers::pi * static_cast<double>(k) * x[static_cast<std::size_t>(j)]);
    }
    sine_norms[k] = s.norm();
    unit_sines[k] = sine_norms[k] > 0.0 ? Vector(s / sine_norms[k]) : Vector(Vector::Unit(n, 0));
  }

  const auto r = static_cast<Eigen::Index>(flat.size());
  Vector weights(r);
  std::vector<Matrix> factors(spec.d, Matrix(n, r));
  std::uniform_real_distribution<double> pick_alpha(-1.0, 1.0);
  std::vector<Index> wave(spec.d);
  for (Eigen::Index t = 0; t < r; ++t) {
    std::uint64_t rem = flat[static_cast<std::size_t>(t)];
    for (Index i = spec.d; i-- > 0;) {
      const Index l = out.metadata.l_values[i];
      wave[i] = static_cast<Index>(rem % l) + 1;
      rem /= l;
    }
    const double a = trig_amplitude(pick_alpha(rng), wave, spec.beta);
    double w = std::abs(a);
    for (Index i = 0; i < spec.d; ++i) {
      w *= sine_norms[wave[i]];
      factors[i].col(t) = unit_sines[wave[i]];
    }
    if (a < 0) factors[0].col(t) *= -1.0;
    weights(t) = w;
    out.wave_numbers.push_back(wave);
    out.amplitudes.push_back(a);
  }
  out.tensor = CpTensor(Grid(std::vector<Index>(spec.d, spec.n_points)), std::move(weights),
                        std::move(factors));
  return out;
}

void write_metadata_csv(std::span<const RandomFunctionMetadata> rows, std::ostream& out) {
  out << "seed,l_values,total_multi_indices,retained_terms\n";
  for (const auto& m : rows) {
    out << m.seed << ',';
    for (std::size_t i = 0; i < m.l_values.size(); ++i) {
      if (i) out << '-';
      out << m.l_values[i];
    }
    out << ',' << m.total_multi_indices << ',' << m.retained_terms << '\n';
  }
}

}  // namespace cptt
