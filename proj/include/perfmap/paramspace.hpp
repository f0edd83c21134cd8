#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace perfmap {

class ParamSpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One hyper-parameter value: integer, real, or symbol.
using Atom = std::variant<std::int64_t, double, std::string>;

/// Reals use up to 6 decimals with trailing zeros removed ("0.1", "182", "0").
std::string format_atom(const Atom& atom);

/// Numeric view of an integer or real atom; nullopt for symbols.
std::optional<double> atom_number(const Atom& atom);

class ParamDomain {
 public:
  ParamDomain(std::string name, std::vector<Atom> values);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Atom>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::optional<std::size_t> index_of(const Atom& value) const;

  bool operator==(const ParamDomain&) const = default;

 private:
  std::string name_;
  std::vector<Atom> values_;
};

/// Ordered list of discrete domains; points are elements of their product.
class ParamSpace {
 public:
  ParamSpace() = default;
  explicit ParamSpace(std::vector<ParamDomain> domains);

  const std::vector<ParamDomain>& domains() const noexcept { return domains_; }
  std::size_t dimension() const noexcept { return domains_.size(); }
  /// Product of the domain cardinalities.
  std::uint64_t size() const noexcept;
  std::optional<std::size_t> index_of(std::string_view name) const;
  const ParamDomain& domain(std::string_view name) const;

  bool operator==(const ParamSpace&) const = default;

 private:
  std::vector<ParamDomain> domains_;
};

/// One atom per domain, in domain order.
struct Settings {
  std::vector<Atom> atoms;

  bool operator==(const Settings&) const = default;
};

using Genes = std::vector<std::size_t>;

enum class LearnerKind { DecisionTree, Svm };

/// The fixed DT and SVM spaces (DT: 7*15*16 = 1680 points, SVM: 2*4*20 = 160).
ParamSpace builtin_space(LearnerKind learner);

/// Cartesian product, last domain varying fastest.
std::vector<Settings> enumerate(const ParamSpace& space);

/// Throws ParamSpaceError unless every atom belongs to its domain.
void validate(const ParamSpace& space, const Settings& s);

Genes encode(const ParamSpace& space, const Settings& s);
Settings decode(const ParamSpace& space, const Genes& genes);

/// "name=value;name=value" in domain order.
std::string canonical_key(const ParamSpace& space, const Settings& s);

}  // namespace perfmap
