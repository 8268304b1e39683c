#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pbcplus/lpmln/formula.hpp"
#include "pbcplus/lpmln/signature.hpp"

namespace pbcplus::lpmln {

/// A set of true atoms over a signature's atom space.
class Interpretation {
 public:
  Interpretation() = default;
  explicit Interpretation(std::size_t atom_count)
      : size_(atom_count), words_((atom_count + 63) / 64, 0) {}

  /// Builds the interpretation assigning each listed constant its value;
  /// unlisted constants have all their atoms false.
  static Interpretation from_values(const Signature& sig,
                                    const std::vector<std::pair<ConstId, ValueIndex>>& values) {
    Interpretation i(sig.atom_count());
    for (auto [c, v] : values) {
      if (v >= sig.constant(c).domain.size()) {
        throw SignatureError("value index outside the domain of '" + sig.constant(c).name + "'");
      }
      i.assign(sig, c, v);
    }
    return i;
  }

  /// Same, with constants and values given by name.
  static Interpretation from_names(
      const Signature& sig, const std::vector<std::pair<std::string, std::string>>& values) {
    Interpretation i(sig.atom_count());
    for (const auto& [name, value] : values) {
      ConstId c = sig.require(name);
      auto v = sig.find_value(c, value);
      if (!v) throw SignatureError("'" + value + "' is not a value of '" + name + "'");
      i.assign(sig, c, *v);
    }
    return i;
  }

  std::size_t size() const { return size_; }

  bool test(AtomId a) const { return (words_[a >> 6] >> (a & 63)) & 1u; }

  void set(AtomId a, bool value = true) {
    const std::uint64_t bit = std::uint64_t{1} << (a & 63);
    if (value) {
      words_[a >> 6] |= bit;
    } else {
      words_[a >> 6] &= ~bit;
    }
  }

  /// Makes c=v the only true atom of constant c.
  void assign(const Signature& sig, ConstId c, ValueIndex v) {
    const Constant& k = sig.constant(c);
    if (k.propositional) {
      set(k.first_atom, v == Signature::kPropTrue);
      return;
    }
    for (std::size_t j = 0; j < k.domain.size(); ++j) {
      set(static_cast<AtomId>(k.first_atom + j), j == v);
    }
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
  }

  std::vector<AtomId> true_atoms() const {
    std::vector<AtomId> out;
    for (AtomId a = 0; a < size_; ++a) {
      if (test(a)) out.push_back(a);
    }
    return out;
  }

  /// The value of c if exactly one of its atoms is true (propositional
  /// constants always have a value).
  std::optional<ValueIndex> value(const Signature& sig, ConstId c) const {
    const Constant& k = sig.constant(c);
    if (k.propositional) {
      return test(k.first_atom) ? Signature::kPropTrue : Signature::kPropFalse;
    }
    std::optional<ValueIndex> out;
    for (std::size_t j = 0; j < k.domain.size(); ++j) {
      if (test(static_cast<AtomId>(k.first_atom + j))) {
        if (out) return std::nullopt;
        out = static_cast<ValueIndex>(j);
      }
    }
    return out;
  }

  bool satisfies(const Formula& f) const {
    return holds(f, [this](AtomId a) { return test(a); });
  }

  bool subset_of(const Interpretation& other) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      if (words_[w] & ~other.words_[w]) return false;
    }
    return true;
  }

  /// `{a=1, b=t, ...}` using the value view where it is defined, listing
  /// true atoms otherwise.
  std::string to_string(const Signature& sig) const {
    std::string out = "{";
    bool first = true;
    auto add = [&](const std::string& s) {
      if (!first) out += ", ";
      first = false;
      out += s;
    };
    for (ConstId c : sig.by_name()) {
      const Constant& k = sig.constant(c);
      if (auto v = value(sig, c)) {
        add(k.name + "=" + k.domain[*v]);
        continue;
      }
      for (std::size_t j = 0; j < k.domain.size(); ++j) {
        if (test(static_cast<AtomId>(k.first_atom + j))) add(k.name + "=" + k.domain[j]);
      }
    }
    out += "}";
    return out;
  }

  friend bool operator==(const Interpretation& a, const Interpretation& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

  /// Raw bit order; not the user-facing ordering (see InterpretationOrder).
  friend bool operator<(const Interpretation& a, const Interpretation& b) {
    return a.words_ < b.words_;
  }

  std::size_t hash() const {
    std::size_t h = size_;
    for (auto w : words_) h = h * 1000003u ^ static_cast<std::size_t>(w ^ (w >> 29));
    return h;
  }

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct InterpretationHash {
  std::size_t operator()(const Interpretation& i) const { return i.hash(); }
};

/// Deterministic user-facing order: constants by name, then by domain
/// order of their value. Constants without a single value sort after
/// every proper value.
class InterpretationOrder {
 public:
  explicit InterpretationOrder(const Signature& sig) : sig_(&sig) {}

  bool operator()(const Interpretation& a, const Interpretation& b) const {
    for (ConstId c : sig_->by_name()) {
      auto ka = key(a, c);
      auto kb = key(b, c);
      if (ka != kb) return ka < kb;
    }
    return false;
  }

 private:
  std::pair<std::size_t, std::uint64_t> key(const Interpretation& i, ConstId c) const {
    const Constant& k = sig_->constant(c);
    if (auto v = i.value(*sig_, c)) return {*v, 0};
    std::uint64_t bits = 0;
    for (std::size_t j = 0; j < k.domain.size() && j < 64; ++j) {
      if (i.test(static_cast<AtomId>(k.first_atom + j))) bits |= std::uint64_t{1} << j;
    }
    return {k.domain.size(), bits};
  }

  const Signature* sig_;
};

}  // namespace pbcplus::lpmln
