#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pbcplus/error.hpp"

namespace pbcplus::lpmln {

using ConstId = std::uint32_t;
using AtomId = std::uint32_t;
using ValueIndex = std::uint32_t;

/// A constant c with finite domain. A multi-valued constant owns one atom
/// c=v per domain value. A propositional constant owns a single atom; its
/// value view is {f, t} with f meaning "atom false".
struct Constant {
  std::string name;
  std::vector<std::string> domain;
  bool propositional = false;
  AtomId first_atom = 0;

  std::size_t atom_count() const { return propositional ? 1 : domain.size(); }

  friend bool operator==(const Constant&, const Constant&) = default;
};

class Signature {
 public:
  static constexpr ValueIndex kPropFalse = 0;
  static constexpr ValueIndex kPropTrue = 1;

  ConstId add_constant(std::string name, std::vector<std::string> domain) {
    if (domain.empty()) {
      throw SignatureError("constant '" + name + "' has an empty domain");
    }
    std::unordered_set<std::string> seen;
    for (const auto& v : domain) {
      if (!seen.insert(v).second) {
        throw SignatureError("constant '" + name + "' repeats value '" + v + "'");
      }
    }
    return insert(Constant{std::move(name), std::move(domain), false, 0});
  }

  ConstId add_proposition(std::string name) {
    return insert(Constant{std::move(name), {"f", "t"}, true, 0});
  }

  std::size_t constant_count() const { return constants_.size(); }
  std::size_t atom_count() const { return atom_owner_.size(); }

  const Constant& constant(ConstId c) const {
    if (c >= constants_.size()) {
      throw SignatureError("constant id " + std::to_string(c) + " out of range");
    }
    return constants_[c];
  }

  const std::vector<Constant>& constants() const { return constants_; }

  std::optional<ConstId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  ConstId require(std::string_view name) const {
    if (auto c = find(name)) return *c;
    throw SignatureError("unknown constant '" + std::string(name) + "'");
  }

  std::optional<ValueIndex> find_value(ConstId c, std::string_view value) const {
    const auto& dom = constant(c).domain;
    auto it = std::find(dom.begin(), dom.end(), value);
    if (it == dom.end()) return std::nullopt;
    return static_cast<ValueIndex>(it - dom.begin());
  }

  /// Atom c=v. Propositional constants only have the atom for v = t.
  AtomId atom(ConstId c, ValueIndex v) const {
    const Constant& k = constant(c);
    if (k.propositional) {
      if (v != kPropTrue) {
        throw SignatureError("propositional constant '" + k.name +
                             "' has no atom for value f");
      }
      return k.first_atom;
    }
    if (v >= k.domain.size()) {
      throw SignatureError("value index " + std::to_string(v) +
                           " outside domain of '" + k.name + "'");
    }
    return k.first_atom + v;
  }

  AtomId atom(std::string_view name, std::string_view value) const {
    ConstId c = require(name);
    auto v = find_value(c, value);
    if (!v) {
      throw SignatureError("'" + std::string(value) + "' is not in the domain of '" +
                           std::string(name) + "'");
    }
    return atom(c, *v);
  }

  bool contains(AtomId a) const { return a < atom_owner_.size(); }

  ConstId constant_of(AtomId a) const {
    check_atom(a);
    return atom_owner_[a];
  }

  ValueIndex value_of(AtomId a) const {
    const Constant& k = constant(constant_of(a));
    return k.propositional ? kPropTrue : a - k.first_atom;
  }

  std::string atom_name(AtomId a) const {
    const Constant& k = constant(constant_of(a));
    if (k.propositional) return k.name;
    return k.name + "=" + k.domain[a - k.first_atom];
  }

  /// Constants sorted by name; used for deterministic output ordering.
  const std::vector<ConstId>& by_name() const { return by_name_; }

  friend bool operator==(const Signature& a, const Signature& b) {
    return a.constants_ == b.constants_;
  }

 private:
  void check_atom(AtomId a) const {
    if (a >= atom_owner_.size()) {
      throw SignatureError("atom id " + std::to_string(a) + " out of range");
    }
  }

  ConstId insert(Constant k) {
    if (index_.count(k.name)) {
      throw SignatureError("duplicate constant '" + k.name + "'");
    }
    auto id = static_cast<ConstId>(constants_.size());
    k.first_atom = static_cast<AtomId>(atom_owner_.size());
    for (std::size_t i = 0; i < k.atom_count(); ++i) atom_owner_.push_back(id);
    index_.emplace(k.name, id);
    constants_.push_back(std::move(k));
    auto pos = std::lower_bound(by_name_.begin(), by_name_.end(), id,
                                [this](ConstId lhs, ConstId rhs) {
                                  return constants_[lhs].name < constants_[rhs].name;
                                });
    by_name_.insert(pos, id);
    return id;
  }

  std::vector<Constant> constants_;
  std::vector<ConstId> atom_owner_;
  std::vector<ConstId> by_name_;
  std::unordered_map<std::string, ConstId> index_;
};

}  // namespace pbcplus::lpmln
