// Copyright 2026 The lqgcode Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <lqgcode/dithered_quantizer.hpp>
#include <lqgcode/error.hpp>
#include <lqgcode/lattice.hpp>
#include <lqgcode/rational.hpp>

#include <json.hpp>

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lqgcode {

using Histogram = std::unordered_map<Coords, std::uint64_t, CoordsHash>;

// Product of independent two-sided geometric laws on Z,
// g(v) = (1 - decay) / (1 + decay) * decay^|v|, evaluated exactly.
class GeometricTail {
 public:
  explicit GeometricTail(double decay) : decay_(decay), lambda_(exact_rational(decay)) {
    if (!(decay > 0.0 && decay < 1.0)) throw Error(ErrorCode::BadParameter, "tail_decay must lie in (0, 1)");
    one_plus_ = 1 + lambda_;
    scale_ = (1 - lambda_) / one_plus_;
  }

  double decay() const { return decay_; }

  Rational value(std::int64_t v) const { return scale_ * power(magnitude(v)); }

  Rational range(std::int64_t a, std::int64_t b) const {
    if (a > b) return Rational(0);
    if (a >= 0) return half_sum(b) - half_sum(a - 1);
    if (b <= 0) return range(-b, -a);
    return half_sum(-a) + half_sum(b) - scale_;
  }

  Rational ball(std::int64_t r, std::size_t n) const {
    if (n == 0) return Rational(1);
    if (r < 0) return Rational(0);
    const Rational side = 1 - 2 * power(static_cast<std::uint64_t>(r) + 1) / one_plus_;
    Rational out = 1;
    for (std::size_t i = 0; i < n; ++i) out *= side;
    return out;
  }

 private:
  static std::uint64_t magnitude(std::int64_t v) {
    return v < 0 ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v);
  }

  Rational power(std::uint64_t k) const {
    mpz_class num, den;
    mpz_pow_ui(num.get_mpz_t(), lambda_.get_num_mpz_t(), k);
    mpz_pow_ui(den.get_mpz_t(), lambda_.get_den_mpz_t(), k);
    return Rational(num, den);
  }

  // sum_{v=0}^{n} g(v) = (1 - decay^{n+1}) / (1 + decay); zero for n < 0.
  Rational half_sum(std::int64_t n) const {
    if (n < 0) return Rational(0);
    return (1 - power(static_cast<std::uint64_t>(n) + 1)) / one_plus_;
  }

  double decay_;
  Rational lambda_;
  Rational one_plus_;
  Rational scale_;
};

// p(k) = (1 - eps) core(k) + eps tail(k): empirical core frequencies mixed
// with a geometric tail so that every lattice point has positive mass.
class LatticePmf {
 public:
  struct Entry {
    Coords point;
    std::uint64_t count = 0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  LatticePmf(std::size_t dim, double delta, double tail_epsilon, double tail_decay, std::vector<Entry> core)
      : dim_(dim), delta_(delta), epsilon_(tail_epsilon), tail_(tail_decay), core_(std::move(core)) {
    if (dim_ == 0) throw Error(ErrorCode::BadParameter, "dimension must be positive");
    if (!(delta_ > 0.0)) throw Error(ErrorCode::BadParameter, "Delta must be positive");
    if (!(epsilon_ > 0.0 && epsilon_ < 1.0)) throw Error(ErrorCode::BadParameter, "tail_epsilon must lie in (0, 1)");
    std::erase_if(core_, [](const Entry& e) { return e.count == 0; });
    if (core_.empty()) throw Error(ErrorCode::EmptyHistogram, "core has no mass");
    for (const auto& e : core_) {
      if (e.point.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "core point has wrong dimension");
    }
    std::sort(core_.begin(), core_.end(),
              [](const Entry& a, const Entry& b) { return EnumerationLess{}(a.point, b.point); });
    for (std::size_t i = 1; i < core_.size(); ++i) {
      if (core_[i].point == core_[i - 1].point) throw Error(ErrorCode::BadParameter, "duplicate core point");
    }
    prefix_.assign(core_.size() + 1, 0);
    shells_.resize(core_.size());
    for (std::size_t i = 0; i < core_.size(); ++i) {
      if (__builtin_add_overflow(prefix_[i], core_[i].count, &prefix_[i + 1])) {
        throw Error(ErrorCode::BadParameter, "histogram total overflows");
      }
      shells_[i] = shell_radius(core_[i].point);
    }
    eps_ = exact_rational(epsilon_);
    core_unit_ = (1 - eps_) / to_rational(total());
    core_unit_.canonicalize();
  }

  std::size_t dim() const { return dim_; }
  double delta() const { return delta_; }
  double tail_epsilon() const { return epsilon_; }
  double tail_decay() const { return tail_.decay(); }
  const std::vector<Entry>& core() const { return core_; }
  std::uint64_t total() const { return prefix_.back(); }

  std::uint64_t core_count(const Coords& q) const {
    const auto it = find(q);
    return it == core_.end() ? 0 : it->count;
  }

  Rational mass(const Coords& q) const {
    check_dim(q);
    Rational tail = eps_;
    for (std::int64_t v : q) tail *= tail_.value(v);
    return core_unit_ * to_rational(core_count(q)) + tail;
  }

  double mass_double(const Coords& q) const { return mass(q).get_d(); }

  // P[q' < q] in enumeration order.
  Rational cumulative_before(const Coords& q) const {
    check_dim(q);
    const std::int64_t r = shell_radius(q);
    const auto it = std::lower_bound(core_.begin(), core_.end(), q,
                                     [](const Entry& e, const Coords& k) { return EnumerationLess{}(e.point, k); });
    const std::uint64_t core_before = prefix_[static_cast<std::size_t>(it - core_.begin())];
    const Rational tail_before = tail_.ball(r - 1, dim_) + shell_prefix_measure<Rational>(q, r, tail_);
    return core_unit_ * to_rational(core_before) + eps_ * tail_before;
  }

  // The point whose cumulative interval [F(q-), F(q)) contains z.
  Coords locate(const Rational& z) const {
    if (z < 0 || z >= 1) throw Error(ErrorCode::MalformedCodeword, "value outside [0, 1)");
    constexpr std::int64_t kMaxShell = 1 << 20;
    std::int64_t r = 0;
    Rational below = 0;  // measure of the ball of radius r - 1
    for (;; ++r) {
      if (r > kMaxShell) throw Error(ErrorCode::MalformedCodeword, "value beyond searchable shells");
      const Rational ball = core_unit_ * to_rational(core_ball_count(r)) + eps_ * tail_.ball(r, dim_);
      if (z < ball) break;
      below = ball;
    }
    Rational rem = z - below;
    // Core entries of shell r with the prefix chosen so far.
    auto lo = std::lower_bound(shells_.begin(), shells_.end(), r) - shells_.begin();
    auto hi = std::upper_bound(shells_.begin(), shells_.end(), r) - shells_.begin();
    Coords out(dim_);
    Rational prefix = eps_;
    bool hits = false;
    for (std::size_t i = 0; i < dim_; ++i) {
      const std::size_t rest = dim_ - 1 - i;
      const Rational full = tail_.ball(r, rest);
      const Rational shell = full - tail_.ball(r - 1, rest);
      bool chosen = false;
      auto cursor = lo;
      for (std::int64_t v = -r; v <= r; ++v) {
        const bool hits_v = hits || v == r || v == -r;
        const Rational weight = prefix * tail_.value(v);
        auto run_end = cursor;
        while (run_end < hi && core_[static_cast<std::size_t>(run_end)].point[i] == v) ++run_end;
        const std::uint64_t cnt = prefix_[static_cast<std::size_t>(run_end)] - prefix_[static_cast<std::size_t>(cursor)];
        const Rational meas = weight * (hits_v ? full : shell) + core_unit_ * to_rational(cnt);
        if (rem < meas) {
          out[i] = v;
          prefix = weight;
          hits = hits_v;
          lo = cursor;
          hi = run_end;
          chosen = true;
          break;
        }
        rem -= meas;
        cursor = run_end;
      }
      if (!chosen) throw Error(ErrorCode::MalformedCodeword, "value not covered by any symbol");
    }
    return out;
  }

  friend bool operator==(const LatticePmf& a, const LatticePmf& b) {
    return a.dim_ == b.dim_ && a.delta_ == b.delta_ && a.epsilon_ == b.epsilon_ &&
           a.tail_decay() == b.tail_decay() && a.core_ == b.core_;
  }

 private:
  static Rational to_rational(std::uint64_t v) {
    mpz_class z;
    mpz_import(z.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
    return Rational(z);
  }

  void check_dim(const Coords& q) const {
    if (q.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "symbol dimension does not match the pmf");
  }

  std::vector<Entry>::const_iterator find(const Coords& q) const {
    const auto it = std::lower_bound(core_.begin(), core_.end(), q,
                                     [](const Entry& e, const Coords& k) { return EnumerationLess{}(e.point, k); });
    return (it != core_.end() && it->point == q) ? it : core_.end();
  }

  std::uint64_t core_ball_count(std::int64_t r) const {
    const auto end = std::upper_bound(shells_.begin(), shells_.end(), r) - shells_.begin();
    return prefix_[static_cast<std::size_t>(end)];
  }

  std::size_t dim_;
  double delta_;
  double epsilon_;
  GeometricTail tail_;
  std::vector<Entry> core_;
  std::vector<std::uint64_t> prefix_;
  std::vector<std::int64_t> shells_;
  Rational eps_;
  Rational core_unit_;
};

// Explicit finite table in enumeration order; symbols outside it have zero
// mass. Useful for small hand-built codes.
class FinitePmf {
 public:
  FinitePmf(std::size_t dim, std::vector<std::pair<Coords, Rational>> table) : dim_(dim), table_(std::move(table)) {
    std::erase_if(table_, [](const auto& e) { return e.second == 0; });
    if (table_.empty()) throw Error(ErrorCode::EmptyHistogram, "empty table");
    Rational sum = 0;
    for (const auto& [k, p] : table_) {
      if (k.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "symbol has wrong dimension");
      if (p < 0) throw Error(ErrorCode::BadParameter, "negative mass");
      sum += p;
    }
    if (sum != 1) throw Error(ErrorCode::BadParameter, "masses must sum to one");
    std::sort(table_.begin(), table_.end(), [](const auto& a, const auto& b) { return EnumerationLess{}(a.first, b.first); });
    prefix_.assign(table_.size() + 1, Rational(0));
    for (std::size_t i = 0; i < table_.size(); ++i) prefix_[i + 1] = prefix_[i] + table_[i].second;
  }

  static FinitePmf from_doubles(std::size_t dim, const std::vector<std::pair<Coords, double>>& table) {
    std::vector<std::pair<Coords, Rational>> t;
    for (const auto& [k, p] : table) t.emplace_back(k, exact_rational(p));
    return FinitePmf(dim, std::move(t));
  }

  std::size_t dim() const { return dim_; }

  Rational mass(const Coords& q) const {
    const auto i = index(q);
    return i < table_.size() && table_[i].first == q ? table_[i].second : Rational(0);
  }

  Rational cumulative_before(const Coords& q) const { return prefix_[index(q)]; }

  Coords locate(const Rational& z) const {
    if (z < 0 || z >= 1) throw Error(ErrorCode::MalformedCodeword, "value outside [0, 1)");
    const auto it = std::upper_bound(prefix_.begin() + 1, prefix_.end(), z);
    if (it == prefix_.end()) throw Error(ErrorCode::MalformedCodeword, "value not covered by any symbol");
    return table_[static_cast<std::size_t>(it - prefix_.begin() - 1)].first;
  }

 private:
  std::size_t index(const Coords& q) const {
    return static_cast<std::size_t>(
        std::lower_bound(table_.begin(), table_.end(), q,
                         [](const auto& e, const Coords& k) { return EnumerationLess{}(e.first, k); }) -
        table_.begin());
  }

  std::size_t dim_;
  std::vector<std::pair<Coords, Rational>> table_;
  std::vector<Rational> prefix_;
};

template <class M>
concept ProbabilityModel = requires(const M& model, const Coords& q, const Rational& z) {
  { model.dim() } -> std::convertible_to<std::size_t>;
  { model.mass(q) } -> std::same_as<Rational>;
  { model.cumulative_before(q) } -> std::same_as<Rational>;
  { model.locate(z) } -> std::same_as<Coords>;
};

struct Codeword {
  std::string bits;  // '0' / '1'
  std::size_t length() const { return bits.size(); }
  friend bool operator==(const Codeword&, const Codeword&) = default;
};

struct Decoded {
  Coords symbol;
  std::size_t consumed = 0;
};

// ceil(-log2 p) + 1.
inline std::size_t sfe_length(const Rational& p) { return ceil_neg_log2(p) + 1; }

// Shannon-Fano-Elias code: the codeword of q is the binary expansion of
// F(q-) + p(q)/2, truncated to ceil(-log2 p(q)) + 1 bits. The cumulative
// function is evaluated in exact rational arithmetic, so the truncation is
// always the true one and the code is prefix-free by construction.
//
// Codewords are memoized; encode/decode are safe to call concurrently.
template <ProbabilityModel Model>
class SfeCodec {
 public:
  static constexpr std::size_t kDefaultMaxBits = std::size_t{1} << 16;

  explicit SfeCodec(Model model, std::size_t max_codeword_bits = kDefaultMaxBits)
      : model_(std::move(model)), max_bits_(max_codeword_bits), cache_(std::make_unique<Cache>()) {}

  const Model& model() const { return model_; }

  Codeword encode(const Coords& q) const {
    {
      std::lock_guard lock(cache_->mu);
      const auto it = cache_->forward.find(q);
      if (it != cache_->forward.end()) return it->second;
    }
    Codeword cw = compute(q);
    remember(q, cw);
    return cw;
  }

  Codeword encode(const LatticePoint& q) const { return encode(q.coords); }

  // Decodes the codeword starting at `pos` of a concatenated bit stream.
  Decoded decode(std::string_view stream, std::size_t pos = 0) const {
    if (pos >= stream.size()) throw Error(ErrorCode::MalformedCodeword, "no bits to decode");
    if (auto hit = lookup(stream, pos)) return *hit;

    const std::size_t avail = stream.size() - pos;
    for (std::size_t probe = 64;; probe *= 2) {
      const std::size_t take = std::min(probe, avail);
      const std::string prefix(stream.substr(pos, take));
      const Coords q = model_.locate(dyadic_value(prefix, 0, take));
      const Codeword cw = encode(q);
      if (cw.length() <= take) {
        if (prefix.compare(0, cw.length(), cw.bits) != 0) {
          throw Error(ErrorCode::MalformedCodeword, "bits do not match the codeword of the located symbol");
        }
        return Decoded{q, cw.length()};
      }
      if (take == avail) throw Error(ErrorCode::MalformedCodeword, "stream ends inside a codeword");
    }
  }

 private:
  struct TrieNode {
    std::int32_t child[2] = {-1, -1};
    std::int32_t symbol = -1;
  };

  struct Cache {
    std::mutex mu;
    std::unordered_map<Coords, Codeword, CoordsHash> forward;
    std::vector<Coords> symbols;
    std::vector<TrieNode> trie = std::vector<TrieNode>(1);
  };

  Codeword compute(const Coords& q) const {
    if (q.size() != model_.dim()) throw Error(ErrorCode::DimensionMismatch, "symbol dimension does not match the model");
    const Rational p = model_.mass(q);
    if (p <= 0) throw Error(ErrorCode::ZeroMass, "symbol has zero probability under the model");
    const std::size_t len = sfe_length(p);
    if (len > max_bits_) {
      throw Error(ErrorCode::PrecisionExhausted, "codeword of " + std::to_string(len) + " bits exceeds the cap");
    }
    Rational mid = model_.cumulative_before(q) + p / 2;
    mid.canonicalize();
    return Codeword{binary_expansion(mid, len)};
  }

  void remember(const Coords& q, const Codeword& cw) const {
    std::lock_guard lock(cache_->mu);
    if (!cache_->forward.emplace(q, cw).second) return;
    const auto id = static_cast<std::int32_t>(cache_->symbols.size());
    cache_->symbols.push_back(q);
    std::int32_t node = 0;
    for (char c : cw.bits) {
      const int b = c == '1';
      if (cache_->trie[static_cast<std::size_t>(node)].child[b] < 0) {
        cache_->trie[static_cast<std::size_t>(node)].child[b] = static_cast<std::int32_t>(cache_->trie.size());
        cache_->trie.emplace_back();
      }
      node = cache_->trie[static_cast<std::size_t>(node)].child[b];
    }
    cache_->trie[static_cast<std::size_t>(node)].symbol = id;
  }

  std::optional<Decoded> lookup(std::string_view stream, std::size_t pos) const {
    std::lock_guard lock(cache_->mu);
    std::int32_t node = 0;
    for (std::size_t i = pos; i < stream.size(); ++i) {
      node = cache_->trie[static_cast<std::size_t>(node)].child[stream[i] == '1'];
      if (node < 0) return std::nullopt;
      const std::int32_t sym = cache_->trie[static_cast<std::size_t>(node)].symbol;
      if (sym >= 0) return Decoded{cache_->symbols[static_cast<std::size_t>(sym)], i - pos + 1};
    }
    return std::nullopt;
  }

  Model model_;
  std::size_t max_bits_;
  std::unique_ptr<Cache> cache_;
};

using LatticeCodec = SfeCodec<LatticePmf>;

inline LatticePmf build_pmf(const Histogram& histogram, double tail_epsilon, double tail_decay, double delta = 1.0) {
  if (histogram.empty()) throw Error(ErrorCode::EmptyHistogram, "histogram is empty");
  if (!(tail_epsilon > 0.0 && tail_epsilon < 1.0)) throw Error(ErrorCode::BadParameter, "tail_epsilon must lie in (0, 1)");
  if (!(tail_decay > 0.0 && tail_decay < 1.0)) throw Error(ErrorCode::BadParameter, "tail_decay must lie in (0, 1)");
  std::vector<LatticePmf::Entry> core;
  core.reserve(histogram.size());
  const std::size_t m = histogram.begin()->first.size();
  for (const auto& [k, n] : histogram) core.push_back({k, n});
  return LatticePmf(m, delta, tail_epsilon, tail_decay, std::move(core));
}

// Sum over the law of the code length ceil(-log2 p(q)) + 1.
template <ProbabilityModel Model>
double expected_length(const Model& model, const std::vector<std::pair<Coords, double>>& law) {
  double total = 0.0, acc = 0.0;
  for (const auto& [k, w] : law) {
    if (w < 0.0) throw Error(ErrorCode::BadParameter, "law has a negative weight");
    total += w;
    if (w == 0.0) continue;
    const Rational p = model.mass(k);
    if (p <= 0) throw Error(ErrorCode::ZeroMass, "law charges a symbol the model excludes");
    acc += w * static_cast<double>(sfe_length(p));
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::BadParameter, "law must sum to one");
  return acc;
}

// Serialized form: one JSON header line, then `count` little-endian records
// of m int64 coordinates followed by a uint64 count, in enumeration order.
inline constexpr int kPmfFormatVersion = 1;

inline void write_pmf(std::ostream& os, const LatticePmf& pmf) {
  nlohmann::json header = {
      {"format", "lqgcode-pmf"},   {"version", kPmfFormatVersion},
      {"m", pmf.dim()},            {"delta", pmf.delta()},
      {"tail_epsilon", pmf.tail_epsilon()}, {"tail_decay", pmf.tail_decay()},
      {"count", pmf.core().size()}, {"total", pmf.total()},
  };
  os << header.dump() << '\n';
  const auto put = [&os](std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    os.write(buf, 8);
  };
  for (const auto& e : pmf.core()) {
    for (std::int64_t c : e.point) put(static_cast<std::uint64_t>(c));
    put(e.count);
  }
  if (!os) throw Error(ErrorCode::IoError, "failed to write pmf");
}

inline LatticePmf read_pmf(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::ParseError, "missing pmf header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("pmf header: ") + e.what());
  }
  struct Header {
    std::size_t m, count;
    double delta, epsilon, decay;
    std::uint64_t total;
  } hd{};
  try {
    if (!h.is_object() || h.value("format", "") != "lqgcode-pmf" || h.value("version", 0) != kPmfFormatVersion) {
      throw Error(ErrorCode::ParseError, "unsupported pmf format");
    }
    hd = {h.at("m").get<std::size_t>(), h.at("count").get<std::size_t>(), h.at("delta").get<double>(),
          h.at("tail_epsilon").get<double>(), h.at("tail_decay").get<double>(), h.at("total").get<std::uint64_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("pmf header: ") + e.what());
  }
  const std::size_t m = hd.m, count = hd.count;
  const auto get = [&is]() {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) throw Error(ErrorCode::ParseError, "truncated pmf payload");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{buf[i]} << (8 * i);
    return v;
  };
  std::vector<LatticePmf::Entry> core(count);
  for (auto& e : core) {
    e.point.resize(m);
    for (auto& c : e.point) c = static_cast<std::int64_t>(get());
    e.count = get();
  }
  LatticePmf pmf(m, hd.delta, hd.epsilon, hd.decay, std::move(core));
  if (pmf.total() != hd.total) throw Error(ErrorCode::ParseError, "pmf total mismatch");
  return pmf;
}

}  // namespace lqgcode
