#pragma once

// RunConfig and its JSON form. Every field has a snake_case key; missing keys
// take defaults, unknown keys are rejected, and serialize() writes every key
// so that parse(serialize(c)) == c.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pion/baselines.hpp"
#include "pion/errors.hpp"
#include "pion/optim.hpp"
#include "pion/problems.hpp"

namespace pion {

enum class ProblemKind { least_squares, procrustes, mlp };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::least_squares;
  std::size_t d_out = 16;
  std::size_t d_in = 16;
  std::size_t n_samples = 64;
  std::size_t d = 8; ///< procrustes
  std::vector<std::size_t> widths{16};
  std::size_t depth = 3;
  std::uint64_t seed = 0;

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

enum class ScheduleKind { constant, cosine };

struct LrSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double floor_fraction = 0.01;

  friend bool operator==(const LrSchedule&, const LrSchedule&) = default;
};

using OptimizerSpec = std::variant<PionConfig, SgdHyper, AdamWHyper, MuonLiteHyper>;

struct RunConfig {
  ProblemSpec problem{};
  OptimizerSpec optimizer{PionConfig{}};
  std::int64_t steps = 100;
  std::int64_t record_every = 1;
  LrSchedule lr_schedule{};
  std::uint64_t seed = 0; ///< drives the initial parameters

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

[[nodiscard]] inline std::string_view to_string(ProblemKind k) {
  switch (k) {
  case ProblemKind::least_squares: return "least_squares";
  case ProblemKind::procrustes: return "procrustes";
  case ProblemKind::mlp: return "mlp";
  }
  return "?";
}

[[nodiscard]] inline std::string_view to_string(ScheduleKind k) {
  return k == ScheduleKind::constant ? "constant" : "cosine";
}

[[nodiscard]] inline std::string_view optimizer_kind(const OptimizerSpec& o) {
  static constexpr std::string_view names[] = {"pion", "sgd", "adamw", "muon_lite"};
  return names[o.index()];
}

[[nodiscard]] inline double optimizer_lr(const OptimizerSpec& o) {
  return std::visit([](const auto& h) { return h.lr; }, o);
}

inline void set_optimizer_lr(OptimizerSpec& o, double lr) {
  std::visit([lr](auto& h) { h.lr = lr; }, o);
}

[[nodiscard]] inline Problem make_problem(const ProblemSpec& s) {
  switch (s.kind) {
  case ProblemKind::least_squares: return least_squares(s.d_out, s.d_in, s.n_samples, s.seed);
  case ProblemKind::procrustes: return procrustes(s.d, s.seed);
  case ProblemKind::mlp: return mlp(s.widths, s.depth, s.n_samples, s.seed);
  }
  throw ConfigError("unknown problem kind");
}

/// The width a sweep scales: d_out for least_squares, d for procrustes, the
/// first hidden width for mlp.
[[nodiscard]] inline std::size_t problem_width(const ProblemSpec& s) {
  switch (s.kind) {
  case ProblemKind::least_squares: return s.d_out;
  case ProblemKind::procrustes: return s.d;
  case ProblemKind::mlp: return s.widths.size() == 1 ? s.widths[0] : s.widths[1];
  }
  return 0;
}

/// Same problem family at a new width: square least_squares, procrustes of
/// size `width`, or an mlp with `width`-wide hidden layers. An mlp given as a
/// single width is square throughout; one given as full layer sizes keeps its
/// input and output dimensions.
[[nodiscard]] inline ProblemSpec scaled_problem(ProblemSpec s, std::size_t width) {
  switch (s.kind) {
  case ProblemKind::least_squares:
    s.d_out = width;
    s.d_in = width;
    break;
  case ProblemKind::procrustes: s.d = width; break;
  case ProblemKind::mlp:
    if (s.widths.size() <= 2) {
      s.widths = {width};
    } else {
      std::fill(s.widths.begin() + 1, s.widths.end() - 1, width);
    }
    break;
  }
  return s;
}

inline void validate(const RunConfig& c) {
  if (c.steps < 1) throw ConfigError("steps must be >= 1");
  if (c.record_every < 1) throw ConfigError("record_every must be >= 1");
  if (!(c.lr_schedule.floor_fraction > 0.0 && c.lr_schedule.floor_fraction <= 1.0)) {
    throw ConfigError("lr_schedule.floor_fraction must lie in (0, 1]");
  }
  const auto& p = c.problem;
  switch (p.kind) {
  case ProblemKind::least_squares:
    if (p.d_out < 1 || p.d_in < 1 || p.n_samples < 1) {
      throw ConfigError("least_squares: d_out, d_in and n_samples must be >= 1");
    }
    break;
  case ProblemKind::procrustes:
    if (p.d < 2) throw ConfigError("procrustes: d must be >= 2");
    break;
  case ProblemKind::mlp:
    if (p.depth < 1 || p.n_samples < 1) throw ConfigError("mlp: depth and n_samples must be >= 1");
    if (p.widths.size() != 1 && p.widths.size() != p.depth + 1) {
      throw ConfigError("mlp: widths must have 1 or depth+1 entries");
    }
    for (auto w : p.widths) {
      if (w < 1) throw ConfigError("mlp: widths must be >= 1");
    }
    break;
  }
  std::visit(
      [](const auto& h) {
        using H = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<H, PionConfig>) {
          validate(h);
        } else {
          if (!(h.lr > 0.0)) throw ConfigError("optimizer lr must be > 0");
          if constexpr (std::is_same_v<H, SgdHyper>) {
            if (!(h.momentum >= 0.0 && h.momentum < 1.0)) throw ConfigError("sgd momentum in [0,1)");
          } else if constexpr (std::is_same_v<H, AdamWHyper>) {
            if (!(h.beta1 >= 0.0 && h.beta1 < 1.0 && h.beta2 >= 0.0 && h.beta2 < 1.0)) {
              throw ConfigError("adamw betas must lie in [0, 1)");
            }
            if (!(h.eps > 0.0)) throw ConfigError("adamw eps must be > 0");
          } else {
            if (!(h.beta1 >= 0.0 && h.beta1 < 1.0)) throw ConfigError("muon_lite beta1 in [0,1)");
            if (h.ns_iters < 1) throw ConfigError("muon_lite ns_iters must be >= 1");
          }
        }
      },
      c.optimizer);
}

namespace detail {

using nlohmann::json;

template <class E, std::size_t N>
E enum_from(const std::string& s, const std::string& field, const E (&values)[N]) {
  std::string allowed;
  for (E v : values) {
    if (to_string(v) == s) {
      return v;
    }
    allowed += (allowed.empty() ? "" : ", ") + std::string(to_string(v));
  }
  throw ParseError("field '" + field + "': unknown value '" + s + "' (expected one of " +
                   allowed + ")");
}

/// Reads typed fields out of one JSON object and remembers which keys were
/// consumed, so leftovers can be reported as unknown.
class ObjectReader {
public:
  ObjectReader(const json& obj, std::string ctx) : obj_(obj), ctx_(std::move(ctx)) {
    if (!obj_.is_object()) {
      throw ParseError("field '" + ctx_ + "': expected an object");
    }
  }

  [[nodiscard]] std::string path(const std::string& key) const {
    return ctx_.empty() ? key : ctx_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.push_back(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  template <class U>
  void unsigned_int(const std::string& key, U& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
      out = static_cast<U>(v->get<std::uint64_t>());
    }
  }

  template <class I>
  void signed_int(const std::string& key, I& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      out = static_cast<I>(v->get<std::int64_t>());
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }

  std::optional<std::string> string(const std::string& key) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      return v->get<std::string>();
    }
    return std::nullopt;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ParseError("field '" + path(key) + "': " + msg);
  }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
        throw ParseError("unknown field '" + path(it.key()) + "'");
      }
    }
  }

private:
  const json& obj_;
  std::string ctx_;
  std::vector<std::string> seen_;
};

inline ProblemSpec problem_from_json(const json& j) {
  ObjectReader r(j, "problem");
  ProblemSpec p;
  const auto name = r.string("name");
  if (!name) {
    throw ParseError("field 'problem.name': required");
  }
  p.kind = enum_from(*name, "problem.name",
                     {ProblemKind::least_squares, ProblemKind::procrustes, ProblemKind::mlp});
  switch (p.kind) {
  case ProblemKind::least_squares:
    r.unsigned_int("d_out", p.d_out);
    r.unsigned_int("d_in", p.d_in);
    r.unsigned_int("n_samples", p.n_samples);
    break;
  case ProblemKind::procrustes: r.unsigned_int("d", p.d); break;
  case ProblemKind::mlp:
    if (const json* w = r.find("widths")) {
      if (!w->is_array() || w->empty()) r.fail("widths", "expected a non-empty integer array");
      p.widths.clear();
      for (const auto& e : *w) {
        if (!e.is_number_unsigned()) r.fail("widths", "expected non-negative integers");
        p.widths.push_back(e.get<std::size_t>());
      }
    }
    r.unsigned_int("depth", p.depth);
    r.unsigned_int("n_samples", p.n_samples);
    break;
  }
  r.unsigned_int("seed", p.seed);
  r.reject_unknown();
  return p;
}

inline json problem_to_json(const ProblemSpec& p) {
  json j;
  j["name"] = std::string(to_string(p.kind));
  switch (p.kind) {
  case ProblemKind::least_squares:
    j["d_out"] = p.d_out;
    j["d_in"] = p.d_in;
    j["n_samples"] = p.n_samples;
    break;
  case ProblemKind::procrustes: j["d"] = p.d; break;
  case ProblemKind::mlp:
    j["widths"] = p.widths;
    j["depth"] = p.depth;
    j["n_samples"] = p.n_samples;
    break;
  }
  j["seed"] = p.seed;
  return j;
}

inline PionConfig pion_from_json(ObjectReader& r) {
  PionConfig c;
  r.number("lr", c.lr);
  r.number("beta1", c.beta1);
  r.number("beta2", c.beta2);
  r.number("rms_c", c.rms_c);
  r.number("eps", c.eps);
  if (auto s = r.string("exp_scheme")) {
    c.exp_scheme.kind = enum_from(*s, r.path("exp_scheme"),
                                  {ExpKind::taylor, ExpKind::cayley, ExpKind::e2});
  }
  r.signed_int("taylor_order", c.exp_scheme.taylor_order);
  if (auto s = r.string("momentum_scheme")) {
    c.momentum_scheme = enum_from(*s, r.path("momentum_scheme"),
                                  {MomentumScheme::none, MomentumScheme::lie,
                                   MomentumScheme::ambient, MomentumScheme::transported_ambient});
  }
  if (auto s = r.string("second_moment")) {
    c.second_moment = enum_from(*s, r.path("second_moment"),
                                {SecondMoment::none, SecondMoment::lie, SecondMoment::ambient});
  }
  if (auto s = r.string("update_mode")) {
    c.update_mode.kind = enum_from(*s, r.path("update_mode"),
                                   {UpdateKind::bilateral, UpdateKind::alternating});
  }
  r.signed_int("alternating_period", c.update_mode.period);
  if (auto s = r.string("mup_mode")) {
    c.mup_mode.kind = enum_from(*s, r.path("mup_mode"),
                                {MupKind::none, MupKind::spectral_normalize, MupKind::orthogonalize});
  }
  r.number("mup_target", c.mup_mode.target);
  r.signed_int("ns_iters", c.mup_mode.ns_iters);
  r.signed_int("power_iters", c.mup_mode.power_iters);
  r.number("power_tol", c.mup_mode.power_tol);
  r.boolean("rms_enabled", c.rms_enabled);
  r.boolean("bias_correction", c.bias_correction);
  if (const json* v = r.find("fixed_alpha")) {
    if (v->is_null()) {
      c.fixed_alpha.reset();
    } else if (v->is_number()) {
      c.fixed_alpha = v->get<double>();
    } else {
      r.fail("fixed_alpha", "expected a number or null");
    }
  }
  return c;
}

inline json pion_to_json(const PionConfig& c) {
  json j;
  j["kind"] = "pion";
  j["lr"] = c.lr;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["rms_c"] = c.rms_c;
  j["eps"] = c.eps;
  j["exp_scheme"] = std::string(to_string(c.exp_scheme.kind));
  j["taylor_order"] = c.exp_scheme.taylor_order;
  j["momentum_scheme"] = std::string(to_string(c.momentum_scheme));
  j["second_moment"] = std::string(to_string(c.second_moment));
  j["update_mode"] = std::string(to_string(c.update_mode.kind));
  j["alternating_period"] = c.update_mode.period;
  j["mup_mode"] = std::string(to_string(c.mup_mode.kind));
  j["mup_target"] = c.mup_mode.target;
  j["ns_iters"] = c.mup_mode.ns_iters;
  j["power_iters"] = c.mup_mode.power_iters;
  j["power_tol"] = c.mup_mode.power_tol;
  j["rms_enabled"] = c.rms_enabled;
  j["bias_correction"] = c.bias_correction;
  j["fixed_alpha"] = c.fixed_alpha ? json(*c.fixed_alpha) : json(nullptr);
  return j;
}

inline OptimizerSpec optimizer_from_json(const json& j) {
  ObjectReader r(j, "optimizer");
  const auto kind = r.string("kind");
  if (!kind) {
    throw ParseError("field 'optimizer.kind': required");
  }
  OptimizerSpec out;
  if (*kind == "pion") {
    out = pion_from_json(r);
  } else if (*kind == "sgd") {
    SgdHyper h;
    r.number("lr", h.lr);
    r.number("momentum", h.momentum);
    r.number("weight_decay", h.weight_decay);
    out = h;
  } else if (*kind == "adamw") {
    AdamWHyper h;
    r.number("lr", h.lr);
    r.number("beta1", h.beta1);
    r.number("beta2", h.beta2);
    r.number("eps", h.eps);
    r.number("weight_decay", h.weight_decay);
    out = h;
  } else if (*kind == "muon_lite") {
    MuonLiteHyper h;
    r.number("lr", h.lr);
    r.number("beta1", h.beta1);
    r.signed_int("ns_iters", h.ns_iters);
    out = h;
  } else {
    throw ParseError("field 'optimizer.kind': unknown value '" + *kind +
                     "' (expected one of pion, sgd, adamw, muon_lite)");
  }
  r.reject_unknown();
  return out;
}

inline json optimizer_to_json(const OptimizerSpec& o) {
  return std::visit(
      [](const auto& h) -> json {
        using H = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<H, PionConfig>) {
          return pion_to_json(h);
        } else if constexpr (std::is_same_v<H, SgdHyper>) {
          return {{"kind", "sgd"}, {"lr", h.lr}, {"momentum", h.momentum},
                  {"weight_decay", h.weight_decay}};
        } else if constexpr (std::is_same_v<H, AdamWHyper>) {
          return {{"kind", "adamw"}, {"lr", h.lr},   {"beta1", h.beta1},
                  {"beta2", h.beta2}, {"eps", h.eps}, {"weight_decay", h.weight_decay}};
        } else {
          return {{"kind", "muon_lite"}, {"lr", h.lr}, {"beta1", h.beta1},
                  {"ns_iters", h.ns_iters}};
        }
      },
      o);
}

inline RunConfig config_from_json(const json& j) {
  ObjectReader r(j, "");
  RunConfig c;
  const json* problem = r.find("problem");
  if (problem == nullptr) {
    throw ParseError("field 'problem': required");
  }
  c.problem = problem_from_json(*problem);
  const json* opt = r.find("optimizer");
  if (opt == nullptr) {
    throw ParseError("field 'optimizer': required");
  }
  c.optimizer = optimizer_from_json(*opt);
  r.signed_int("steps", c.steps);
  r.signed_int("record_every", c.record_every);
  if (const json* s = r.find("lr_schedule")) {
    ObjectReader sr(*s, "lr_schedule");
    if (auto k = sr.string("kind")) {
      c.lr_schedule.kind =
          enum_from(*k, "lr_schedule.kind", {ScheduleKind::constant, ScheduleKind::cosine});
    }
    sr.number("floor_fraction", c.lr_schedule.floor_fraction);
    sr.reject_unknown();
  }
  r.unsigned_int("seed", c.seed);
  r.reject_unknown();
  return c;
}

inline json config_to_json(const RunConfig& c) {
  json j;
  j["problem"] = problem_to_json(c.problem);
  j["optimizer"] = optimizer_to_json(c.optimizer);
  j["steps"] = c.steps;
  j["record_every"] = c.record_every;
  j["lr_schedule"] = {{"kind", std::string(to_string(c.lr_schedule.kind))},
                      {"floor_fraction", c.lr_schedule.floor_fraction}};
  j["seed"] = c.seed;
  return j;
}

inline json parse_json_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line/column for the message.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError("config is not valid JSON at line " + std::to_string(line) + ", column " +
                     std::to_string(col));
  }
}

} // namespace detail

/// Parses a JSON config. Syntax and field errors raise ParseError; value range
/// problems are left to validate().
[[nodiscard]] inline RunConfig config_parse(std::string_view text) {
  return detail::config_from_json(detail::parse_json_text(text));
}

[[nodiscard]] inline std::string config_serialize(const RunConfig& c) {
  return detail::config_to_json(c).dump(2) + "\n";
}

/// Applies one `key=value` override. Keys are dotted paths
/// (`optimizer.lr`) or bare names looked up in the top level, then the
/// optimizer, problem and lr_schedule objects. Values are parsed as JSON,
/// falling back to a plain string.
[[nodiscard]] inline RunConfig apply_override(const RunConfig& c, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }

  nlohmann::json j = detail::config_to_json(c);
  nlohmann::json* target = nullptr;
  if (const auto dot = key.find('.'); dot != std::string::npos) {
    const std::string head = key.substr(0, dot);
    const std::string tail = key.substr(dot + 1);
    if (j.contains(head) && j[head].is_object() && j[head].contains(tail)) {
      target = &j[head][tail];
    }
  } else if (j.contains(key) && !j[key].is_object()) {
    target = &j[key];
  } else {
    for (const char* section : {"optimizer", "problem", "lr_schedule"}) {
      if (j[section].contains(key)) {
        target = &j[section][key];
        break;
      }
    }
  }
  if (target == nullptr) {
    throw ConfigError("override names unknown field '" + key + "'");
  }
  *target = value;
  try {
    return detail::config_from_json(j);
  } catch (const ParseError& e) {
    throw ConfigError("override '" + std::string(assignment) + "': " + e.what());
  }
}

} // namespace pion
