#include "hypflow/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hypflow/errors.hpp"
#include "hypflow/spec_grammar.hpp"

namespace hypflow::config {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"flow",
       {"f_spec", "n", "M", "cfl_safety", "stop_theta", "stop_time", "epsilon_policy",
        "stencil_order", "tso_rho", "max_steps"}},
      {"scenario", {"name", "radius", "amplitude", "mode", "amplitude2", "mode2", "noise", "seed"}},
      {"output", {"directory", "cadence", "profile_every", "formats", "emit_plot_data"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {}

  const std::string* raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.find(section);
    if (sec == tree_.not_found()) return nullptr;
    const auto it = sec->second.find(key);
    if (it == sec->second.not_found()) return nullptr;
    return &it->second.data();
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& what) const {
    throw ConfigError(source_ + ": [" + section + "] " + key + ": " + what);
  }

  template <class T>
  void number(const std::string& section, const std::string& key, T& out) const {
    const auto* text = raw(section, key);
    if (!text) return;
    const std::string v = trim(*text);
    T parsed{};
    const auto res = std::from_chars(v.data(), v.data() + v.size(), parsed);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
      fail(section, key, "expected a number, got '" + v + "'");
    out = parsed;
  }

  template <class T>
  void optional_number(const std::string& section, const std::string& key,
                       std::optional<T>& out) const {
    if (!raw(section, key)) return;
    T value{};
    number(section, key, value);
    out = value;
  }

  void boolean(const std::string& section, const std::string& key, bool& out) const {
    const auto* text = raw(section, key);
    if (!text) return;
    const std::string v = trim(*text);
    if (v == "true" || v == "1" || v == "yes")
      out = true;
    else if (v == "false" || v == "0" || v == "no")
      out = false;
    else
      fail(section, key, "expected true or false, got '" + v + "'");
  }

  void text(const std::string& section, const std::string& key, std::string& out) const {
    if (const auto* t = raw(section, key)) out = trim(*t);
  }

 private:
  const pt::ptree& tree_;
  std::string source_;
};

void check_layout(const pt::ptree& tree, const std::string& source) {
  const auto& allowed = allowed_keys();
  for (const auto& [section, body] : tree) {
    const auto known = allowed.find(section);
    if (known == allowed.end())
      throw ConfigError(source + ": unknown section or top-level key '" + section +
                        "' (sections: [flow], [scenario], [output])");
    for (const auto& [key, value] : body) {
      if (!known->second.count(key))
        throw ConfigError(source + ": unknown key '" + key + "' in [" + section + "]");
      if (!value.empty()) throw ConfigError(source + ": nested key '" + key + "'");
    }
  }
}

std::string num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

ScenarioConfig parse(std::istream& in, const std::string& source_name) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source_name + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  check_layout(tree, source_name);
  Reader r(tree, source_name);

  ScenarioConfig c;
  auto& f = c.flow;
  if (const auto* spec = r.raw("flow", "f_spec")) {
    try {
      f.f_spec = symfunc::parse_spec(trim(*spec));
    } catch (const ConfigError& e) {
      r.fail("flow", "f_spec", e.what());
    }
  }
  r.number("flow", "n", f.n);
  r.number("flow", "M", f.M);
  r.number("flow", "cfl_safety", f.cfl_safety);
  r.number("flow", "stop_theta", f.stop_theta);
  r.optional_number("flow", "stop_time", f.stop_time);
  r.number("flow", "epsilon_policy", f.epsilon_policy);
  r.number("flow", "stencil_order", f.stencil_order);
  r.optional_number("flow", "tso_rho", f.tso_rho);
  r.number("flow", "max_steps", f.max_steps);

  auto& s = f.scenario;
  r.text("scenario", "name", s.name);
  r.number("scenario", "radius", s.radius);
  r.number("scenario", "amplitude", s.amplitude);
  r.number("scenario", "mode", s.mode);
  r.number("scenario", "amplitude2", s.amplitude2);
  r.number("scenario", "mode2", s.mode2);
  r.number("scenario", "noise", s.noise);
  r.number("scenario", "seed", s.seed);
  if (s.name != "sphere" && s.name != "perturbed_sphere" && s.name != "two_mode")
    r.fail("scenario", "name", "unknown scenario '" + s.name +
                                   "' (known: sphere, perturbed_sphere, two_mode)");

  r.text("output", "directory", c.output.directory);
  r.number("output", "cadence", f.cadence_dtau);
  r.number("output", "profile_every", f.profile_every);
  r.boolean("output", "emit_plot_data", c.output.emit_plot_data);
  if (const auto* formats = r.raw("output", "formats")) {
    c.output.csv = c.output.jsonl = c.output.json = false;
    std::stringstream list(*formats);
    for (std::string item; std::getline(list, item, ',');) {
      item = trim(item);
      if (item == "csv")
        c.output.csv = true;
      else if (item == "jsonl")
        c.output.jsonl = true;
      else if (item == "json")
        c.output.json = true;
      else if (!item.empty())
        r.fail("output", "formats", "unknown format '" + item + "' (known: csv, jsonl, json)");
    }
  }

  try {
    f.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  return c;
}

ScenarioConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  return parse(in, path.string());
}

std::string write(const ScenarioConfig& c) {
  const auto& f = c.flow;
  const auto& s = f.scenario;
  std::ostringstream out;
  out << "[flow]\n";
  out << "f_spec = " << symfunc::to_string(f.f_spec) << '\n';
  out << "n = " << f.n << '\n';
  out << "M = " << f.M << '\n';
  out << "cfl_safety = " << num(f.cfl_safety) << '\n';
  out << "stop_theta = " << num(f.stop_theta) << '\n';
  if (f.stop_time) out << "stop_time = " << num(*f.stop_time) << '\n';
  out << "epsilon_policy = " << num(f.epsilon_policy) << '\n';
  out << "stencil_order = " << f.stencil_order << '\n';
  if (f.tso_rho) out << "tso_rho = " << num(*f.tso_rho) << '\n';
  out << "max_steps = " << f.max_steps << '\n';
  out << "\n[scenario]\n";
  out << "name = " << s.name << '\n';
  out << "radius = " << num(s.radius) << '\n';
  out << "amplitude = " << num(s.amplitude) << '\n';
  out << "mode = " << s.mode << '\n';
  out << "amplitude2 = " << num(s.amplitude2) << '\n';
  out << "mode2 = " << s.mode2 << '\n';
  out << "noise = " << num(s.noise) << '\n';
  out << "seed = " << s.seed << '\n';
  out << "\n[output]\n";
  if (!c.output.directory.empty()) out << "directory = " << c.output.directory << '\n';
  out << "cadence = " << num(f.cadence_dtau) << '\n';
  out << "profile_every = " << f.profile_every << '\n';
  std::string formats;
  for (auto [on, name] : {std::pair{c.output.csv, "csv"}, {c.output.jsonl, "jsonl"},
                          {c.output.json, "json"}})
    if (on) formats += (formats.empty() ? "" : ",") + std::string(name);
  out << "formats = " << formats << '\n';
  out << "emit_plot_data = " << (c.output.emit_plot_data ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace hypflow::config
