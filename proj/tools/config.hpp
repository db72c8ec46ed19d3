#pragma once

#include "deformk/core.hpp"
#include "deformk/field.hpp"
#include "deformk/kernels.hpp"
#include "deformk/potential.hpp"
#include "deformk/solver.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace deformk::cli {

using json = nlohmann::json;

// typed access with the dotted field path in every message
class Config {
 public:
  Config(json j, std::string path = "") : j_(std::move(j)), path_(std::move(path)) {}

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
  Config at(const std::string& key) const;
  double num(const std::string& key) const;
  double num(const std::string& key, double def) const { return has(key) ? num(key) : def; }
  int integer(const std::string& key, int def) const;
  long long integer64(const std::string& key, long long def) const;
  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& def) const { return has(key) ? str(key) : def; }
  bool flag(const std::string& key, bool def) const;
  std::vector<double> nums(const std::string& key) const;
  std::vector<double> nums(const std::string& key, std::vector<double> def) const {
    return has(key) ? nums(key) : def;
  }
  std::vector<Config> list(const std::string& key) const;
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const json& raw() const { return j_; }

 private:
  json j_;
  std::string path_;
};

Potential parse_potential(const Config& c);
KernelSpec parse_kernel(const Config& c);
Box parse_box(const Config& c, int dim);
double parse_h(const Config& c);
Vec parse_point(const Config& c, const std::string& key, int dim);

// rule catalogs
ExteriorRule parse_exterior(const Config& c);
SourceRule parse_source(const Config& c);
KernelRule parse_kernel_rule(const Config& c, const KernelSpec& spec);
Equation parse_equation(const Config& c, const KernelSpec& spec);

}  // namespace deformk::cli
