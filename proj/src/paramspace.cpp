#include "perfmap/paramspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace perfmap {

std::string format_atom(const Atom& atom) {
  if (const auto* i = std::get_if<std::int64_t>(&atom)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&atom)) return *s;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", std::get<double>(atom));
  std::string out(buf);
  out.erase(out.find_last_not_of('0') + 1);
  if (out.back() == '.') out.pop_back();
  if (out == "-0") out = "0";
  return out;
}

std::optional<double> atom_number(const Atom& atom) {
  if (const auto* i = std::get_if<std::int64_t>(&atom)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&atom)) return *d;
  return std::nullopt;
}

ParamDomain::ParamDomain(std::string name, std::vector<Atom> values)
    : name_(std::move(name)), values_(std::move(values)) {
  if (name_.empty()) throw ParamSpaceError("domain name is empty");
  if (values_.empty()) throw ParamSpaceError("domain '" + name_ + "' has no values");
  std::set<std::string> seen;
  for (const auto& v : values_) {
    if (const auto* d = std::get_if<double>(&v); d && !std::isfinite(*d)) {
      throw ParamSpaceError("domain '" + name_ + "' has a non-finite value");
    }
    // Rendered text must be unique so that canonical keys stay injective.
    if (!seen.insert(format_atom(v)).second) {
      throw ParamSpaceError("domain '" + name_ + "' has duplicate value " + format_atom(v));
    }
  }
}

std::optional<std::size_t> ParamDomain::index_of(const Atom& value) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == value) return i;
  }
  // An integral number matches an integer/real atom of the same value.
  if (auto n = atom_number(value)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (auto m = atom_number(values_[i]); m && *m == *n) return i;
    }
  }
  return std::nullopt;
}

ParamSpace::ParamSpace(std::vector<ParamDomain> domains) : domains_(std::move(domains)) {
  if (domains_.empty()) throw ParamSpaceError("parameter space has no domains");
  std::set<std::string> names;
  for (const auto& d : domains_) {
    if (!names.insert(d.name()).second) {
      throw ParamSpaceError("duplicate domain name '" + d.name() + "'");
    }
  }
}

std::uint64_t ParamSpace::size() const noexcept {
  std::uint64_t n = 1;
  for (const auto& d : domains_) n *= d.size();
  return n;
}

std::optional<std::size_t> ParamSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    if (domains_[i].name() == name) return i;
  }
  return std::nullopt;
}

const ParamDomain& ParamSpace::domain(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw ParamSpaceError("unknown parameter '" + std::string(name) + "'");
  return domains_[*i];
}

namespace {

// Inclusive start, stepping while <= end.
std::vector<std::int64_t> stepped(std::int64_t first, std::int64_t last, std::int64_t step) {
  std::vector<std::int64_t> out;
  for (auto i = first; i <= last; i += step) out.push_back(i);
  return out;
}

}  // namespace

ParamSpace builtin_space(LearnerKind learner) {
  if (learner == LearnerKind::DecisionTree) {
    std::vector<Atom> impurity, samples, depth;
    for (auto i : stepped(0, 6, 1)) impurity.emplace_back(static_cast<double>(i) / 10.0);
    for (auto i : stepped(2, 150, 10)) samples.emplace_back(i);
    for (auto i : stepped(1, 160, 10)) depth.emplace_back(i);
    return ParamSpace({{"min_impurity", std::move(impurity)},
                       {"min_samples", std::move(samples)},
                       {"max_depth", std::move(depth)}});
  }
  std::vector<Atom> c_values;
  for (auto i : stepped(1, 200, 20)) c_values.emplace_back(static_cast<double>(i) / 100.0);
  for (auto i : stepped(2, 200, 20)) c_values.emplace_back(static_cast<double>(i));
  return ParamSpace({{"gamma", {Atom{"scale"}, Atom{"auto"}}},
                     {"kernel", {Atom{"linear"}, Atom{"poly"}, Atom{"rbf"}, Atom{"sigmoid"}}},
                     {"C", std::move(c_values)}});
}

std::vector<Settings> enumerate(const ParamSpace& space) {
  std::vector<Settings> out;
  if (space.dimension() == 0) return out;
  out.reserve(space.size());
  Genes genes(space.dimension(), 0);
  const auto& doms = space.domains();
  while (true) {
    out.push_back(decode(space, genes));
    std::size_t d = doms.size();
    while (d > 0) {
      --d;
      if (++genes[d] < doms[d].size()) break;
      genes[d] = 0;
      if (d == 0) return out;
    }
  }
}

void validate(const ParamSpace& space, const Settings& s) {
  if (s.atoms.size() != space.dimension()) {
    throw ParamSpaceError("settings have " + std::to_string(s.atoms.size()) +
                          " values, space has " + std::to_string(space.dimension()) +
                          " domains");
  }
  for (std::size_t i = 0; i < s.atoms.size(); ++i) {
    if (!space.domains()[i].index_of(s.atoms[i])) {
      throw ParamSpaceError("value " + format_atom(s.atoms[i]) + " not in domain '" +
                            space.domains()[i].name() + "'");
    }
  }
}

Genes encode(const ParamSpace& space, const Settings& s) {
  validate(space, s);
  Genes genes(s.atoms.size());
  for (std::size_t i = 0; i < s.atoms.size(); ++i) {
    genes[i] = *space.domains()[i].index_of(s.atoms[i]);
  }
  return genes;
}

Settings decode(const ParamSpace& space, const Genes& genes) {
  if (genes.size() != space.dimension()) {
    throw ParamSpaceError("gene vector length does not match space dimension");
  }
  Settings s;
  s.atoms.reserve(genes.size());
  for (std::size_t i = 0; i < genes.size(); ++i) {
    const auto& dom = space.domains()[i];
    if (genes[i] >= dom.size()) {
      throw ParamSpaceError("gene " + std::to_string(genes[i]) + " out of range for '" +
                            dom.name() + "'");
    }
    s.atoms.push_back(dom.values()[genes[i]]);
  }
  return s;
}

std::string canonical_key(const ParamSpace& space, const Settings& s) {
  validate(space, s);
  std::string key;
  for (std::size_t i = 0; i < s.atoms.size(); ++i) {
    if (i) key += ';';
    const auto& dom = space.domains()[i];
    key += dom.name();
    key += '=';
    key += format_atom(dom.values()[*dom.index_of(s.atoms[i])]);
  }
  return key;
}

}  // namespace perfmap
