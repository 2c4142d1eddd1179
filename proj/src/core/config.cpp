#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "errors.hpp"

namespace mu2opt {

using nlohmann::json;

namespace {

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : s_(text) {}

  json parse_document() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_ws();
        const auto path = parse_key_path();
        skip_ws();
        expect(']');
        table = &descend(root, path);
        end_of_line();
        continue;
      }
      const auto path = parse_key_path();
      skip_ws();
      expect('=');
      skip_ws();
      json value = parse_value();
      json* target = table;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) target = &child_table(*target, path[i]);
      if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
      (*target)[path.back()] = std::move(value);
      end_of_line();
    }
    return root;
  }

  json parse_single_value() {
    skip_ws();
    json v = parse_value();
    skip_ws();
    if (!eof()) fail("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() == '\n') {
        ++pos_;
        ++line_;
      } else {
        break;
      }
    }
  }
  /// Inside arrays newlines and comments are insignificant.
  void skip_ws_multiline() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') {
        ++pos_;
      } else if (peek() == '\n') {
        ++pos_;
        ++line_;
      } else {
        break;
      }
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') fail("unexpected characters at end of line");
    ++pos_;
    ++line_;
  }

  std::string parse_bare_key() {
    const auto start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (start == pos_) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path;
    while (true) {
      skip_ws();
      path.push_back(peek() == '"' ? parse_string() : parse_bare_key());
      skip_ws();
      if (peek() != '.') break;
      ++pos_;
    }
    return path;
  }

  json& child_table(json& parent, const std::string& key) {
    if (!parent.contains(key)) parent[key] = json::object();
    json& child = parent[key];
    if (!child.is_object()) fail("key '" + key + "' is not a table");
    return child;
  }

  json& descend(json& root, const std::vector<std::string>& path) {
    json* t = &root;
    for (const auto& k : path) t = &child_table(*t, k);
    return *t;
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  json parse_number_or_word() {
    const auto start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                      peek() == '-' || peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string word(s_.substr(start, pos_ - start));
    if (word.empty()) fail("expected a value");
    if (word == "true") return true;
    if (word == "false") return false;
    if (word == "inf" || word == "+inf") return std::numeric_limits<double>::infinity();
    std::string digits;
    for (char c : word) {
      if (c != '_') digits += c;
    }
    const bool integral = digits.find_first_of(".eE") == std::string::npos;
    if (integral) {
      std::int64_t iv = 0;
      const char* b = digits.data() + (digits[0] == '+' ? 1 : 0);
      const auto [p, ec] = std::from_chars(b, digits.data() + digits.size(), iv);
      if (ec == std::errc() && p == digits.data() + digits.size()) return iv;
    }
    double dv = 0.0;
    const char* b = digits.data() + (digits[0] == '+' ? 1 : 0);
    const auto [p, ec] = std::from_chars(b, digits.data() + digits.size(), dv);
    if (ec != std::errc() || p != digits.data() + digits.size()) fail("cannot parse value '" + word + "'");
    return dv;
  }

  json parse_value() {
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      skip_ws_multiline();
      while (peek() != ']') {
        arr.push_back(parse_value());
        skip_ws_multiline();
        if (peek() == ',') {
          ++pos_;
          skip_ws_multiline();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      ++pos_;
      return arr;
    }
    if (c == '{') {
      ++pos_;
      json obj = json::object();
      skip_ws();
      while (peek() != '}') {
        const auto path = parse_key_path();
        skip_ws();
        expect('=');
        skip_ws();
        json* target = &obj;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) target = &child_table(*target, path[i]);
        (*target)[path.back()] = parse_value();
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          skip_ws();
        } else if (peek() != '}') {
          fail("expected ',' or '}' in inline table");
        }
      }
      ++pos_;
      return obj;
    }
    return parse_number_or_word();
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

std::int64_t as_int(const json& v, const std::string& key) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  throw ConfigError("'" + key + "' must be an integer");
}

std::size_t as_count(const json& v, const std::string& key) {
  const auto i = as_int(v, key);
  if (i < 0) throw ConfigError("'" + key + "' must be nonnegative");
  return static_cast<std::size_t>(i);
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
  return v.get<std::string>();
}

Point as_point(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) throw ConfigError("'" + key + "' must be a nonempty array of numbers");
  Point p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = as_real(v[i], key);
  return p;
}

void reject_unknown(const json& table, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (const auto& [k, _] : table.items()) {
    bool ok = false;
    for (auto name : known) ok = ok || k == name;
    if (!ok) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

FeasibleSet decode_set(const json& t, Eigen::Index dimension) {
  reject_unknown(t, {"kind", "center", "radius", "lower", "upper", "diameter"}, "[set]");
  const std::string kind = t.contains("kind") ? as_string(t["kind"], "set.kind") : "ball";
  if (kind == "ball") {
    Point center = t.contains("center") ? as_point(t["center"], "set.center") : Point::Zero(dimension);
    const double radius = t.contains("radius") ? as_real(t["radius"], "set.radius") : 1.0;
    return FeasibleSet::ball(std::move(center), radius);
  }
  if (kind == "box") {
    if (!t.contains("lower") || !t.contains("upper")) throw ConfigError("box set needs lower and upper");
    return FeasibleSet::box(as_point(t["lower"], "set.lower"), as_point(t["upper"], "set.upper"));
  }
  if (kind == "unconstrained") {
    if (!t.contains("diameter")) throw ConfigError("unconstrained set needs a declared diameter");
    return FeasibleSet::unconstrained(as_real(t["diameter"], "set.diameter"));
  }
  throw ConfigError("unknown set kind '" + kind + "'");
}

WeightSchedule decode_alpha(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "linear") return WeightSchedule::linear();
    if (s == "uniform") return WeightSchedule::uniform();
    throw ConfigError("unknown alpha schedule '" + s + "'");
  }
  if (v.is_object() && v.size() == 1 && v.contains("gamma")) {
    return WeightSchedule::fixed_gamma(as_real(v["gamma"], "schedules.alpha.gamma"));
  }
  throw ConfigError("alpha must be \"linear\", \"uniform\" or {gamma = <value>}");
}

MomentumSchedule decode_beta(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inverse_alpha") return MomentumSchedule::inverse_alpha();
    if (s == "inverse_t") return MomentumSchedule::inverse_t();
    throw ConfigError("unknown beta schedule '" + s + "'");
  }
  if (v.is_object() && v.size() == 1 && v.contains("fixed")) {
    return MomentumSchedule::fixed(as_real(v["fixed"], "schedules.beta.fixed"));
  }
  throw ConfigError("beta must be \"inverse_alpha\", \"inverse_t\" or {fixed = <value>}");
}

Eigen::Index csv_feature_count(const std::string& path) {
  std::ifstream in(path);
  std::string header;
  if (!in || !std::getline(in, header)) throw IngestionError("cannot read corpus header from " + path, 1);
  return static_cast<Eigen::Index>(std::count(header.begin(), header.end(), ','));
}

ProblemSpec decode_problem(const json& t) {
  reject_unknown(t, {"kind", "dimension", "x_star", "sigma", "c", "csv", "loss", "blobs"}, "[problem]");
  ProblemSpec p;
  if (t.contains("kind")) p.kind = as_string(t["kind"], "problem.kind");
  if (t.contains("loss")) {
    const auto loss = as_string(t["loss"], "problem.loss");
    if (loss == "logistic") {
      p.loss = Loss::logistic;
    } else if (loss == "squared") {
      p.loss = Loss::squared;
    } else {
      throw ConfigError("problem.loss must be logistic or squared");
    }
  }
  if (t.contains("x_star")) p.x_star = as_point(t["x_star"], "problem.x_star");
  if (t.contains("dimension")) {
    p.dimension = static_cast<Eigen::Index>(as_count(t["dimension"], "problem.dimension"));
  } else if (p.x_star.size()) {
    p.dimension = p.x_star.size();
  }
  if (!t.contains("dimension") && !p.csv_path.empty()) p.dimension = csv_feature_count(p.csv_path);
  if (p.dimension == 0) throw ConfigError("problem.dimension must be >= 1");
  if (t.contains("sigma")) p.sigma = as_real(t["sigma"], "problem.sigma");
  if (t.contains("c")) p.c = as_real(t["c"], "problem.c");
  if (t.contains("csv")) p.csv_path = as_string(t["csv"], "problem.csv");
  if (t.contains("blobs")) {
    const auto& b = t["blobs"];
    reject_unknown(b, {"n", "dimension", "seed", "margin"}, "problem.blobs");
    BlobSpec spec;
    if (b.contains("n")) spec.n = as_count(b["n"], "problem.blobs.n");
    if (b.contains("dimension")) spec.dimension = static_cast<Eigen::Index>(as_count(b["dimension"], "problem.blobs.dimension"));
    if (b.contains("seed")) spec.seed = static_cast<std::uint64_t>(as_int(b["seed"], "problem.blobs.seed"));
    if (b.contains("margin")) spec.margin = as_real(b["margin"], "problem.blobs.margin");
    p.blobs = spec;
    if (!t.contains("dimension")) p.dimension = spec.dimension;
  }
  return p;
}

}  // namespace

json parse_toml(std::string_view text) { return TomlParser(text).parse_document(); }

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = TomlParser(raw).parse_single_value();
  } catch (const ConfigError&) {
    value = raw;
  }
  json* target = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*target)[part] = value;
      break;
    }
    if (!target->contains(part)) (*target)[part] = json::object();
    target = &(*target)[part];
    if (!target->is_object()) throw ConfigError("override key '" + key + "' crosses a non-table value");
    start = dot + 1;
  }
}

RunConfiguration decode_configuration(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a table");
  reject_unknown(doc,
                 {"algorithm", "lr", "seed", "master_seed", "T", "log_points", "workers", "output_dir",
                  "stop_threshold", "x1", "problem", "set", "schedules", "heavy_ball", "sweep"},
                 "the top-level table");
  RunConfiguration cfg;
  cfg.document = doc;
  cfg.problem = decode_problem(doc.value("problem", json::object()));

  OptimizerConfig& opt = cfg.optimizer;
  opt.set = doc.contains("set") ? decode_set(doc["set"], cfg.problem.dimension)
                                : FeasibleSet::unit_ball(cfg.problem.dimension);
  if (doc.contains("algorithm")) opt.algorithm = parse_algorithm(as_string(doc["algorithm"], "algorithm"));
  if (doc.contains("lr")) opt.lr = as_real(doc["lr"], "lr");
  if (doc.contains("T")) opt.horizon = as_count(doc["T"], "T");
  if (doc.contains("log_points")) opt.log_points = as_count(doc["log_points"], "log_points");
  if (doc.contains("stop_threshold")) opt.stop_threshold = as_real(doc["stop_threshold"], "stop_threshold");
  if (doc.contains("x1")) opt.x1 = as_point(doc["x1"], "x1");
  if (doc.contains("seed")) cfg.seed = as_int(doc["seed"], "seed");
  if (doc.contains("master_seed")) cfg.master_seed = static_cast<std::uint64_t>(as_int(doc["master_seed"], "master_seed"));
  if (doc.contains("workers")) cfg.workers = std::max<std::size_t>(1, as_count(doc["workers"], "workers"));
  if (doc.contains("output_dir")) cfg.output_dir = as_string(doc["output_dir"], "output_dir");

  std::optional<Schedules> schedules;
  if (doc.contains("schedules")) {
    const auto& s = doc["schedules"];
    reject_unknown(s, {"alpha", "beta"}, "[schedules]");
    Schedules sc = default_schedules(opt.algorithm);
    if (s.contains("alpha")) sc.weights = decode_alpha(s["alpha"]);
    if (s.contains("beta")) sc.momentum = decode_beta(s["beta"]);
    schedules = sc;
  }
  const bool tag_defines = opt.algorithm == Algorithm::mu2_sgd_uniform || opt.algorithm == Algorithm::mu2_sgd_fixed;
  opt.schedules = tag_defines ? std::nullopt : schedules;

  if (doc.contains("heavy_ball")) {
    const auto& hb = doc["heavy_ball"];
    reject_unknown(hb, {"momentum", "dampening"}, "[heavy_ball]");
    if (hb.contains("momentum")) opt.heavy_ball.momentum = as_real(hb["momentum"], "heavy_ball.momentum");
    if (hb.contains("dampening")) opt.heavy_ball.dampening = as_real(hb["dampening"], "heavy_ball.dampening");
  }

  if (doc.contains("sweep")) {
    const auto& s = doc["sweep"];
    reject_unknown(s, {"algorithms", "learning_rates", "lr_range", "seeds", "factor"}, "[sweep]");
    cfg.has_sweep = true;
    SweepGrid& g = cfg.grid;
    g.problem = cfg.problem;
    g.base = opt;
    g.schedules = schedules;
    if (!s.contains("algorithms") || !s["algorithms"].is_array()) throw ConfigError("sweep.algorithms must be an array");
    for (const auto& a : s["algorithms"]) g.algorithms.push_back(parse_algorithm(as_string(a, "sweep.algorithms")));
    if (s.contains("learning_rates")) {
      if (!s["learning_rates"].is_array()) throw ConfigError("sweep.learning_rates must be an array");
      for (const auto& v : s["learning_rates"]) g.learning_rates.push_back(as_real(v, "sweep.learning_rates"));
    } else if (s.contains("lr_range")) {
      const auto& r = s["lr_range"];
      if (!r.is_object() || !r.contains("min") || !r.contains("max") || !r.contains("points")) {
        throw ConfigError("sweep.lr_range must be {min = .., max = .., points = ..}");
      }
      g.learning_rates = log_spaced(as_real(r["min"], "lr_range.min"), as_real(r["max"], "lr_range.max"),
                                    as_count(r["points"], "lr_range.points"));
    } else {
      throw ConfigError("sweep needs learning_rates or lr_range");
    }
    if (s.contains("seeds")) {
      if (!s["seeds"].is_array()) throw ConfigError("sweep.seeds must be an array");
      for (const auto& v : s["seeds"]) g.seeds.push_back(as_int(v, "sweep.seeds"));
    } else {
      g.seeds = {cfg.seed};
    }
    if (s.contains("factor")) cfg.stability_factor = as_real(s["factor"], "sweep.factor");
    g.validate();
  }
  return cfg;
}

RunConfiguration load_configuration(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc = parse_toml(buf.str());
  for (const auto& o : overrides) apply_override(doc, o);
  return decode_configuration(doc);
}

}  // namespace mu2opt
