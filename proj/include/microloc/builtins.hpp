#pragma once

#include <map>
#include <string>

#include "json.hpp"
#include "microloc/escape.hpp"
#include "microloc/hamilton.hpp"
#include "microloc/symbols.hpp"
#include "microloc/waves.hpp"

namespace microloc {

using Json = nlohmann::ordered_json;

/// Rejects unknown keys; `where` anchors the error message.
void check_keys(const Json& obj, const std::string& where,
                std::initializer_list<const char*> allowed);

double get_num(const Json& obj, const std::string& key,
               const std::string& where);
double get_num_or(const Json& obj, const std::string& key, double fallback);
Vec get_vec(const Json& obj, const std::string& key, const std::string& where,
            int dim);

/// Named symbol definitions from a config's "symbols" section, plus the
/// shorthand forms "box", "bracket:m", "eps-bracket:eps:p".
class SymbolTable {
 public:
  SymbolTable(int dim, double period);
  SymbolTable(int dim, double period, const Json& defs);

  Symbol resolve(const std::string& name) const;
  Symbol build(const Json& def, const std::string& where) const;
  bool has(const std::string& name) const;
  EscapeSpec escape_spec(const std::string& name) const;  // kind == "escape"

  int dim() const { return dim_; }
  double period() const { return period_; }

 private:
  int dim_;
  double period_;
  Json defs_;
  mutable std::map<std::string, Symbol> cache_;
};

SolutionFamily parse_solution(const Json& def, const std::string& where);
ControlNet parse_net(const Json& def, const std::string& where, int dim,
                     const SymbolTable& table);
EscapeSpec parse_escape_spec(const Json& def, const std::string& where,
                             int dim, double period);

/// Stable sorted catalog of builders, solution families and experiments.
std::string builtins_catalog();

}  // namespace microloc
