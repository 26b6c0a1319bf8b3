#pragma once

// Finite alphabets with a priori weights, locally constant potentials and
// shift-invariant measures of finite Markov order.
//
// Entropy is relative to the a priori product measure m⊗ and uses natural
// logarithms, so it is <= 0 with equality exactly at m⊗. Add log k to
// recover the Shannon entropy rate when m is uniform.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "thermoflat/common.hpp"

namespace thermoflat {

/// Alphabet {0, ..., k-1} with full-support a priori probability weights.
class AprioriAlphabet {
 public:
  AprioriAlphabet() = default;
  explicit AprioriAlphabet(Vector m) : m_(std::move(m)) {
    if (m_.size() < 2) throw ModelError("alphabet: at least two symbols required");
    double s = 0.0;
    for (double w : m_) {
      if (!(w > 0.0) || !std::isfinite(w)) throw ModelError("alphabet: a priori weights must be positive");
      s += w;
    }
    if (std::abs(s - 1.0) > Tolerances::probability_sum) throw ModelError("alphabet: a priori weights must sum to 1");
  }
  static AprioriAlphabet uniform(std::size_t k) { return AprioriAlphabet(Vector(k, 1.0 / static_cast<double>(k))); }

  std::size_t size() const { return m_.size(); }
  double weight(std::size_t a) const { return m_[a]; }
  const Vector& weights() const { return m_; }

  friend bool operator==(const AprioriAlphabet&, const AprioriAlphabet&) = default;

 private:
  Vector m_;
};

/// Word <-> index with the first symbol most significant.
inline std::size_t word_index(std::span<const int> word, std::size_t k) {
  std::size_t idx = 0;
  for (int s : word) idx = idx * k + static_cast<std::size_t>(s);
  return idx;
}

inline std::vector<int> index_word(std::size_t idx, std::size_t k, int length) {
  std::vector<int> w(static_cast<std::size_t>(length));
  for (int j = length; j-- > 0;) {
    w[static_cast<std::size_t>(j)] = static_cast<int>(idx % k);
    idx /= k;
  }
  return w;
}

/// Locally constant potential depending on the first `memory` symbols.
class CylinderPotential {
 public:
  CylinderPotential() = default;
  CylinderPotential(AprioriAlphabet alphabet, int memory, Vector table, std::string name = "")
      : alphabet_(std::move(alphabet)), memory_(memory), table_(std::move(table)), name_(std::move(name)) {
    if (memory_ < 1 || memory_ > Tolerances::max_memory)
      throw ModelError("potential '" + name_ + "': memory must be in [1, " +
                       std::to_string(Tolerances::max_memory) + "]");
    if (table_.size() != ipow(alphabet_.size(), memory_))
      throw ModelError("potential '" + name_ + "': table size must be k^memory");
    for (double v : table_)
      if (!std::isfinite(v)) throw ModelError("potential '" + name_ + "': non-finite entry");
  }

  static CylinderPotential constant(const AprioriAlphabet& alphabet, double c, int memory = 1) {
    return {alphabet, memory, Vector(ipow(alphabet.size(), memory), c), "const"};
  }
  static CylinderPotential zero(const AprioriAlphabet& alphabet, int memory = 1) {
    return constant(alphabet, 0.0, memory);
  }

  const AprioriAlphabet& alphabet() const { return alphabet_; }
  std::size_t k() const { return alphabet_.size(); }
  int memory() const { return memory_; }
  const Vector& table() const { return table_; }
  const std::string& name() const { return name_; }
  std::size_t words() const { return table_.size(); }

  double at(std::size_t word) const { return table_[word]; }
  double operator()(std::span<const int> word) const {
    return table_[word_index(word.first(static_cast<std::size_t>(memory_)), k())];
  }

  double sup_norm() const {
    double s = 0.0;
    for (double v : table_) s = std::max(s, std::abs(v));
    return s;
  }

  /// Same function viewed as depending on the first `memory` symbols.
  CylinderPotential padded(int memory) const {
    if (memory < memory_) throw ModelError("padded: cannot reduce memory");
    if (memory == memory_) return *this;
    const std::size_t tail = ipow(k(), memory - memory_);
    Vector t(ipow(k(), memory));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = table_[i / tail];
    return {alphabet_, memory, std::move(t), name_};
  }

  void check_alphabet(const AprioriAlphabet& other) const {
    if (!(alphabet_ == other)) throw ModelError("alphabet mismatch");
  }

 private:
  AprioriAlphabet alphabet_;
  int memory_ = 1;
  Vector table_;
  std::string name_;
};

/// sum_i c_i phi_i (+ optional offset potential), padded to the largest memory.
inline CylinderPotential linear_combination(const AprioriAlphabet& alphabet,
                                            std::span<const CylinderPotential> phis, std::span<const double> coeffs,
                                            const CylinderPotential* offset = nullptr, std::string name = "") {
  if (phis.size() != coeffs.size()) throw ModelError("linear_combination: dimension mismatch");
  int mem = offset ? offset->memory() : 1;
  for (const auto& p : phis) {
    p.check_alphabet(alphabet);
    mem = std::max(mem, p.memory());
  }
  Vector t(ipow(alphabet.size(), mem), 0.0);
  auto accumulate = [&](const CylinderPotential& p, double c) {
    const std::size_t tail = ipow(alphabet.size(), mem - p.memory());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += c * p.at(i / tail);
  };
  if (offset) {
    offset->check_alphabet(alphabet);
    accumulate(*offset, 1.0);
  }
  for (std::size_t i = 0; i < phis.size(); ++i)
    if (coeffs[i] != 0.0) accumulate(phis[i], coeffs[i]);
  return {alphabet, mem, std::move(t), std::move(name)};
}

/// Dense row-major square matrix.
struct SquareMatrix {
  std::size_t n = 0;
  Vector a;
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t dim, double fill = 0.0) : n(dim), a(dim * dim, fill) {}
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
};

/// Stationary Markov measure of order r on the full shift over k symbols.
///
/// States are words of length r (a single empty state when r = 0, in which
/// case the measure is the product of `stationary`). The transition kernel
/// gives the law of the next symbol given the current state.
class MarkovMeasure {
 public:
  MarkovMeasure() = default;

  static MarkovMeasure product(std::size_t k, Vector p) {
    if (p.size() != k) throw ModelError("product measure: probability vector has wrong length");
    check_probability(p, "product measure");
    MarkovMeasure mu;
    mu.k_ = k;
    mu.order_ = 0;
    mu.kernel_ = {p};
    mu.stationary_ = {1.0};
    return mu;
  }

  /// Chain from its state-to-state transition matrix (k^r x k^r). The
  /// stationary law is solved for; a chain with several closed classes is
  /// rejected unless `require_ergodic` is false, in which case the lazy
  /// chain is iterated from the uniform law.
  static MarkovMeasure chain(std::size_t k, int order, const SquareMatrix& q, bool require_ergodic = true) {
    MarkovMeasure mu = from_transitions(k, order, q);
    mu.stationary_ = mu.solve_stationary(require_ergodic);
    return mu;
  }

  /// Chain with an explicitly supplied stationary law (verified).
  static MarkovMeasure chain(std::size_t k, int order, const SquareMatrix& q, Vector stationary) {
    MarkovMeasure mu = from_transitions(k, order, q);
    if (stationary.size() != mu.states()) throw ModelError("markov: stationary vector has wrong length");
    check_probability(stationary, "markov stationary law");
    mu.stationary_ = std::move(stationary);
    mu.check_stationarity();
    return mu;
  }

  /// Order-1 chain from a k x k stochastic matrix given as rows.
  static MarkovMeasure chain(const std::vector<Vector>& rows, bool require_ergodic = true) {
    return chain(rows.size(), 1, to_matrix(rows), require_ergodic);
  }
  static MarkovMeasure chain(const std::vector<Vector>& rows, Vector stationary) {
    return chain(rows.size(), 1, to_matrix(rows), std::move(stationary));
  }

  std::size_t k() const { return k_; }
  int order() const { return order_; }
  std::size_t states() const { return ipow(k_, order_); }
  const Vector& stationary() const { return stationary_; }
  /// kernel()[s][b] = Pr(next symbol b | state s)
  const std::vector<Vector>& kernel() const { return kernel_; }

  std::size_t successor(std::size_t state, int symbol) const {
    if (order_ == 0) return 0;
    return (state * k_) % states() + static_cast<std::size_t>(symbol);
  }

  /// Full state-to-state matrix (1 x 1 for products).
  SquareMatrix transitions() const {
    SquareMatrix q(states());
    for (std::size_t s = 0; s < states(); ++s)
      for (std::size_t b = 0; b < k_; ++b) q(s, successor(s, static_cast<int>(b))) += kernel_[s][b];
    return q;
  }

  /// Probabilities of all words of the given length, indexed by word_index.
  Vector word_probabilities(int length) const {
    if (length < 1) throw ModelError("word_probabilities: length must be positive");
    const std::size_t nw = ipow(k_, length);
    Vector out(nw, 0.0);
    if (length <= order_) {
      const std::size_t tail = ipow(k_, order_ - length);
      for (std::size_t s = 0; s < states(); ++s) out[s / tail] += stationary_[s];
      return out;
    }
    // Walk forward from the initial state: prefix of length r then kernel steps.
    const std::size_t extra = ipow(k_, length - order_);
    for (std::size_t s = 0; s < states(); ++s) {
      if (stationary_[s] == 0.0) continue;
      for (std::size_t tail = 0; tail < extra; ++tail) {
        const auto w = index_word(tail, k_, length - order_);
        double p = stationary_[s];
        std::size_t state = s;
        for (int sym : w) {
          p *= kernel_[state][static_cast<std::size_t>(sym)];
          if (p == 0.0) break;
          state = successor(state, sym);
        }
        out[s * extra + tail] = p;
      }
    }
    return out;
  }

  /// Irreducible and aperiodic on the support of the stationary law.
  bool is_ergodic() const {
    if (order_ == 0) return true;
    const std::size_t n = states();
    std::vector<std::size_t> support;
    for (std::size_t s = 0; s < n; ++s)
      if (stationary_[s] > 0.0) support.push_back(s);
    // BFS levels from one support state; irreducible iff all support states reached
    // and no edge leaves the support; period = gcd of level mismatches.
    std::vector<long> level(n, -1);
    std::vector<std::size_t> queue{support.front()};
    level[support.front()] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t u = queue[qi];
      for (std::size_t b = 0; b < k_; ++b) {
        if (kernel_[u][b] <= 0.0) continue;
        const std::size_t v = successor(u, static_cast<int>(b));
        if (level[v] < 0) {
          level[v] = level[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (std::size_t s : support)
      if (level[s] < 0) return false;
    long period = 0;
    for (std::size_t u : queue)
      for (std::size_t b = 0; b < k_; ++b) {
        if (kernel_[u][b] <= 0.0) continue;
        const std::size_t v = successor(u, static_cast<int>(b));
        if (stationary_[v] <= 0.0 && stationary_[u] > 0.0) return false;
        period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
      }
    return period == 1;
  }

  /// Samples a path of n symbols.
  template <class Rng>
  std::vector<int> sample_path(std::size_t n, Rng& rng) const {
    std::vector<int> path;
    path.reserve(n + static_cast<std::size_t>(order_));
    std::size_t state = draw(stationary_, rng);
    if (order_ > 0) {
      for (int s : index_word(state, k_, order_)) path.push_back(s);
    }
    while (path.size() < n) {
      const int sym = static_cast<int>(draw(kernel_[state], rng));
      path.push_back(sym);
      state = successor(state, sym);
    }
    path.resize(n);
    return path;
  }

 private:
  template <class Rng>
  static std::size_t draw(const Vector& p, Rng& rng) {
    // 53 random bits -> [0, 1); independent of the standard library's distributions
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double c = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0) continue;
      c += p[i];
      last = i;
      if (u < c) return i;
    }
    return last;
  }

  static void check_probability(const Vector& p, const std::string& what) {
    double s = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ModelError(what + ": negative or non-finite probability");
      s += v;
    }
    if (std::abs(s - 1.0) > Tolerances::probability_sum) throw ModelError(what + ": probabilities must sum to 1");
  }

  static SquareMatrix to_matrix(const std::vector<Vector>& rows) {
    SquareMatrix q(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw ModelError("markov: transition matrix must be square");
      for (std::size_t j = 0; j < rows.size(); ++j) q(i, j) = rows[i][j];
    }
    return q;
  }

  static MarkovMeasure from_transitions(std::size_t k, int order, const SquareMatrix& q) {
    if (k < 2) throw ModelError("markov: alphabet size must be at least 2");
    if (order < 1 || order > Tolerances::max_memory) throw ModelError("markov: order must be in [1, max memory]");
    MarkovMeasure mu;
    mu.k_ = k;
    mu.order_ = order;
    const std::size_t n = mu.states();
    if (q.n != n) throw ModelError("markov: transition matrix must be k^order square");
    mu.kernel_.assign(n, Vector(k, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
      double row = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double v = q(s, t);
        if (!(v >= 0.0) || !std::isfinite(v)) throw ModelError("markov: negative or non-finite transition");
        row += v;
        if (v == 0.0) continue;
        // state s can only move to states sharing its overlap
        if (t / k != (s * k) % n / k) throw ModelError("markov: transition support inconsistent with word overlap");
        mu.kernel_[s][t % k] += v;
      }
      if (std::abs(row - 1.0) > Tolerances::probability_sum) throw ModelError("markov: rows must sum to 1");
    }
    return mu;
  }

  std::size_t closed_classes() const {
    const std::size_t n = states();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (std::size_t s = 0; s < n; ++s) {
      reach[s][s] = 1;
      for (std::size_t b = 0; b < k_; ++b)
        if (kernel_[s][b] > 0.0) reach[s][successor(s, static_cast<int>(b))] = 1;
    }
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t i = 0; i < n; ++i)
        if (reach[i][m])
          for (std::size_t j = 0; j < n; ++j)
            if (reach[m][j]) reach[i][j] = 1;
    // a state is in a closed class iff everything it reaches reaches it back
    std::vector<char> seen(n, 0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      bool closed = true;
      for (std::size_t j = 0; j < n && closed; ++j)
        if (reach[i][j] && !reach[j][i]) closed = false;
      if (!closed || seen[i]) continue;
      ++count;
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][j]) seen[j] = 1;
    }
    return count;
  }

  Vector solve_stationary(bool require_ergodic) const {
    const std::size_t n = states();
    const SquareMatrix q = transitions();
    if (closed_classes() == 1) {
      // (Q^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
      Eigen::MatrixXd a(n, n);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = q(j, i) - (i == j ? 1.0 : 0.0);
      for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
      rhs(n - 1) = 1.0;
      Eigen::VectorXd pi = a.fullPivLu().solve(rhs);
      Vector out(n);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += out[i] = std::max(0.0, pi(i));
      for (double& v : out) v /= s;
      return polish(out, q);
    }
    if (require_ergodic) throw ModelError("non-ergodic transition matrix");
    Vector pi(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < Tolerances::power_iteration_cap; ++it) {
      Vector next(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) next[j] += 0.5 * pi[i] * (q(i, j) + (i == j ? 1.0 : 0.0));
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(next[i] - pi[i]));
      pi.swap(next);
      if (d < Tolerances::power_iteration) return pi;
    }
    throw SolverError("stationary law: power iteration did not converge");
  }

  static Vector polish(Vector pi, const SquareMatrix& q) {
    // a few exact multiplications by Q remove the linear-solve rounding
    for (int it = 0; it < 4; ++it) {
      Vector next(q.n, 0.0);
      for (std::size_t i = 0; i < q.n; ++i)
        for (std::size_t j = 0; j < q.n; ++j) next[j] += pi[i] * q(i, j);
      const double s = std::accumulate(next.begin(), next.end(), 0.0);
      for (double& v : next) v /= s;
      pi.swap(next);
    }
    return pi;
  }

  void check_stationarity() const {
    const SquareMatrix q = transitions();
    for (std::size_t j = 0; j < q.n; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < q.n; ++i) v += stationary_[i] * q(i, j);
      if (std::abs(v - stationary_[j]) > Tolerances::stationarity)
        throw ModelError("markov: supplied law is not stationary");
    }
  }

  std::size_t k_ = 0;
  int order_ = 0;
  std::vector<Vector> kernel_;
  Vector stationary_;
};

/// mu(phi) = sum over words of length memory of Pr(w) phi(w).
inline double expectation(const MarkovMeasure& mu, const CylinderPotential& phi) {
  if (mu.k() != phi.k()) throw ModelError("expectation: alphabet mismatch");
  const Vector p = mu.word_probabilities(phi.memory());
  double s = 0.0;
  for (std::size_t w = 0; w < p.size(); ++w) s += p[w] * phi.at(w);
  return s;
}

inline Vector expectations(const MarkovMeasure& mu, std::span<const CylinderPotential> phis) {
  Vector out;
  out.reserve(phis.size());
  for (const auto& p : phis) out.push_back(expectation(mu, p));
  return out;
}

/// Entropy rate relative to the a priori product measure (natural log, <= 0).
inline double entropy_rate(const MarkovMeasure& mu, const AprioriAlphabet& alphabet) {
  if (mu.k() != alphabet.size()) throw ModelError("entropy_rate: alphabet mismatch");
  double h = 0.0;
  for (std::size_t s = 0; s < mu.states(); ++s) {
    const double ps = mu.stationary()[s];
    if (ps == 0.0) continue;
    for (std::size_t b = 0; b < mu.k(); ++b) {
      const double q = mu.kernel()[s][b];
      if (q > 0.0) h -= ps * q * std::log(q / alphabet.weight(b));
    }
  }
  return h;
}

/// n^{-1} sum_{j<n} phi(T^j w), with the word extended periodically.
inline double birkhoff_average(const CylinderPotential& phi, std::span<const int> word) {
  const std::size_t n = word.size();
  const auto mem = static_cast<std::size_t>(phi.memory());
  if (n < mem) throw ModelError("birkhoff_average: word shorter than the potential memory");
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < mem; ++i) idx = idx * phi.k() + static_cast<std::size_t>(word[(j + i) % n]);
    s += phi.at(idx);
  }
  return s / static_cast<double>(n);
}

/// n^{-1} sum_{j<n} phi(T^j path) using the symbols that follow in the
/// path itself; requires path.size() >= n + memory - 1.
inline double birkhoff_average_open(const CylinderPotential& phi, std::span<const int> path, std::size_t n) {
  const auto mem = static_cast<std::size_t>(phi.memory());
  if (n == 0 || path.size() + 1 < n + mem) throw ModelError("birkhoff_average_open: path too short");
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < mem; ++i) idx = idx * phi.k() + static_cast<std::size_t>(path[j + i]);
    s += phi.at(idx);
  }
  return s / static_cast<double>(n);
}

/// Total-variation distance between the laws of words of the given length.
inline double cylinder_distance(const MarkovMeasure& a, const MarkovMeasure& b, int length = 2) {
  const Vector pa = a.word_probabilities(length), pb = b.word_probabilities(length);
  double d = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) d += std::abs(pa[i] - pb[i]);
  return 0.5 * d;
}

/// Finite convex combination of Markov measures with explicit weights;
/// the weights are the Choquet (ergodic decomposition) measure when every
/// component is ergodic.
class MixtureMeasure {
 public:
  struct Component {
    double weight;
    MarkovMeasure measure;
    bool ergodic;
  };

  MixtureMeasure() = default;
  explicit MixtureMeasure(std::vector<Component> components) : components_(std::move(components)) {
    if (components_.empty()) throw ModelError("mixture: no components");
    double s = 0.0;
    for (const auto& c : components_) {
      if (!(c.weight > 0.0 && c.weight <= 1.0)) throw ModelError("mixture: weights must lie in (0, 1]");
      if (c.measure.k() != components_.front().measure.k()) throw ModelError("mixture: alphabet mismatch");
      if (c.ergodic && !c.measure.is_ergodic())
        throw ModelError("mixture: component flagged ergodic is not irreducible and aperiodic");
      s += c.weight;
    }
    if (std::abs(s - 1.0) > Tolerances::probability_sum) throw ModelError("mixture: weights must sum to 1");
  }
  static MixtureMeasure single(MarkovMeasure mu) {
    const bool erg = mu.is_ergodic();
    return MixtureMeasure({{1.0, std::move(mu), erg}});
  }

  const std::vector<Component>& components() const { return components_; }
  std::size_t k() const { return components_.front().measure.k(); }
  bool all_ergodic() const {
    return std::all_of(components_.begin(), components_.end(), [](const Component& c) { return c.ergodic; });
  }

  Vector word_probabilities(int length) const {
    Vector out(ipow(k(), length), 0.0);
    for (const auto& c : components_) {
      const Vector p = c.measure.word_probabilities(length);
      for (std::size_t i = 0; i < p.size(); ++i) out[i] += c.weight * p[i];
    }
    return out;
  }

 private:
  std::vector<Component> components_;
};

inline double mixture_expectation(const MixtureMeasure& mix, const CylinderPotential& phi) {
  double s = 0.0;
  for (const auto& c : mix.components()) s += c.weight * expectation(c.measure, phi);
  return s;
}

inline double mixture_entropy(const MixtureMeasure& mix, const AprioriAlphabet& alphabet) {
  double s = 0.0;
  for (const auto& c : mix.components()) s += c.weight * entropy_rate(c.measure, alphabet);
  return s;
}

}  // namespace thermoflat
