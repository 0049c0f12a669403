#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pcc/trainer.hpp"

namespace pcc {

namespace {

std::string fmt_real(real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

real parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const real r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': '" + v + "' is not a number");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': '" + v + "' is not an integer");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::int64_t> parse_int_list(const std::string& key,
                                         const std::string& v) {
  std::vector<std::int64_t> out;
  for (const auto& tok : split_list(v)) out.push_back(parse_int(key, tok));
  if (out.empty()) throw ParseError("config key '" + key + "': empty list");
  return out;
}

std::string fmt_int_list(const std::vector<std::int64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// one entry per recognized key: setter + getter for canonical serialization
struct KeyHandler {
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;  // null: alias key
};

const std::map<std::string, KeyHandler>& key_table() {
  static const std::map<std::string, KeyHandler> table = [] {
    std::map<std::string, KeyHandler> t;
    auto real_key = [&t](const std::string& k, real TrainConfig::* field) {
      t[k] = {[k, field](TrainConfig& c, const std::string& v) {
                c.*field = parse_real(k, v);
              },
              [field](const TrainConfig& c) { return fmt_real(c.*field); }};
    };
    auto int_key = [&t](const std::string& k,
                        std::int64_t TrainConfig::* field) {
      t[k] = {[k, field](TrainConfig& c, const std::string& v) {
                c.*field = parse_int(k, v);
              },
              [field](const TrainConfig& c) { return std::to_string(c.*field); }};
    };
    auto bool_key = [&t](const std::string& k, bool TrainConfig::* field) {
      t[k] = {[k, field](TrainConfig& c, const std::string& v) {
                c.*field = parse_bool(k, v);
              },
              [field](const TrainConfig& c) {
                return c.*field ? std::string("true") : std::string("false");
              }};
    };
    auto list_key = [&t](const std::string& k,
                         std::vector<std::int64_t> TrainConfig::* field) {
      t[k] = {[k, field](TrainConfig& c, const std::string& v) {
                c.*field = parse_int_list(k, v);
              },
              [field](const TrainConfig& c) { return fmt_int_list(c.*field); }};
    };
    auto str_key = [&t](const std::string& k,
                        std::string TrainConfig::* field) {
      t[k] = {[field](TrainConfig& c, const std::string& v) { c.*field = v; },
              [field](const TrainConfig& c) { return c.*field; }};
    };

    real_key("lr_G", &TrainConfig::lr_G);
    real_key("lr_D", &TrainConfig::lr_D);
    real_key("lr_decay", &TrainConfig::lr_decay);
    int_key("lr_decay_epochs", &TrainConfig::lr_decay_epochs);
    real_key("lr_floor", &TrainConfig::lr_floor);
    real_key("lambda", &TrainConfig::lambda);
    real_key("beta", &TrainConfig::beta);
    real_key("lambda_f_start", &TrainConfig::lambda_f_start);
    int_key("lambda_f_ramp_iters", &TrainConfig::lambda_f_ramp_iters);
    int_key("steps", &TrainConfig::steps);
    int_key("batch_size", &TrainConfig::batch_size);
    t["seed"] = {[](TrainConfig& c, const std::string& v) {
                   c.seed = static_cast<std::uint64_t>(parse_int("seed", v));
                 },
                 [](const TrainConfig& c) { return std::to_string(c.seed); }};
    bool_key("adversarial", &TrainConfig::adversarial);
    t["no_discriminator"] = {// alias of !adversarial (ablation spelling)
                             [](TrainConfig& c, const std::string& v) {
                               c.adversarial = !parse_bool("no_discriminator", v);
                             },
                             nullptr};
    int_key("d_steps_per_g", &TrainConfig::d_steps_per_g);
    int_key("pretrain_steps", &TrainConfig::pretrain_steps);
    bool_key("augment_scaling", &TrainConfig::augment_scaling);
    int_key("epoch_size", &TrainConfig::epoch_size);
    int_key("N_c", &TrainConfig::N_c);
    int_key("N_s", &TrainConfig::N_s);
    t["radii"] = {[](TrainConfig& c, const std::string& v) {
                    const auto toks = split_list(v);
                    if (toks.size() != 3)
                      throw ParseError("config key 'radii': need 3 values");
                    for (int i = 0; i < 3; ++i)
                      c.radii[i] = parse_real("radii", toks[i]);
                  },
                  [](const TrainConfig& c) {
                    return fmt_real(c.radii[0]) + "," + fmt_real(c.radii[1]) +
                           "," + fmt_real(c.radii[2]);
                  }};
    t["max_samples"] = {[](TrainConfig& c, const std::string& v) {
                          const auto toks = split_list(v);
                          if (toks.size() != 3)
                            throw ParseError(
                                "config key 'max_samples': need 3 values");
                          for (int i = 0; i < 3; ++i)
                            c.max_samples[i] = parse_int("max_samples", toks[i]);
                        },
                        [](const TrainConfig& c) {
                          return std::to_string(c.max_samples[0]) + "," +
                                 std::to_string(c.max_samples[1]) + "," +
                                 std::to_string(c.max_samples[2]);
                        }};
    int_key("resolution", &TrainConfig::resolution);
    int_key("latent_width", &TrainConfig::latent_width);
    list_key("enc1_widths", &TrainConfig::enc1_widths);
    list_key("enc2_widths", &TrainConfig::enc2_widths);
    list_key("coarse_hidden", &TrainConfig::coarse_hidden);
    list_key("lift_feature_widths", &TrainConfig::lift_feature_widths);
    int_key("lift_contraction_width", &TrainConfig::lift_contraction_width);
    list_key("disp_hidden", &TrainConfig::disp_hidden);
    list_key("disc_point_widths", &TrainConfig::disc_point_widths);
    list_key("disc_integrate_widths", &TrainConfig::disc_integrate_widths);
    real_key("grid_code_range", &TrainConfig::grid_code_range);
    int_key("fps_start_index", &TrainConfig::fps_start_index);
    bool_key("no_mean_shape", &TrainConfig::no_mean_shape);
    bool_key("no_contraction_expansion", &TrainConfig::no_contraction_expansion);
    bool_key("no_mirror", &TrainConfig::no_mirror);
    str_key("manifest", &TrainConfig::manifest);
    str_key("data_root", &TrainConfig::data_root);
    str_key("out_dir", &TrainConfig::out_dir);
    int_key("checkpoint_every", &TrainConfig::checkpoint_every);
    int_key("log_every", &TrainConfig::log_every);
    return t;
  }();
  return table;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(const std::string& key) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& [k, _] : key_table()) {
    const auto d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best_d <= std::max<std::size_t>(2, key.size() / 2) ? best : "";
}

}  // namespace

TrainConfig parse_config_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  TrainConfig cfg;
  std::vector<std::string> unknown;
  for (const auto& [key, value] : pairs) {
    auto it = key_table().find(key);
    if (it == key_table().end()) {
      std::string msg = "'" + key + "'";
      const std::string hint = nearest_key(key);
      if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
      unknown.push_back(msg);
      continue;
    }
    it->second.set(cfg, value);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config key";
    if (unknown.size() > 1) msg += "s";
    msg += ": ";
    for (std::size_t i = 0; i < unknown.size(); ++i)
      msg += (i ? ", " : "") + unknown[i];
    throw ContractViolation(msg);
  }
  return cfg;
}

std::string config_to_text(const TrainConfig& cfg) {
  std::string out;
  for (const auto& [key, handler] : key_table()) {
    if (!handler.get) continue;  // alias keys are not serialized
    out += key + " = " + handler.get(cfg) + "\n";
  }
  return out;
}

TrainConfig config_from_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::istringstream is(text);
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected 'key = value', got '" + line + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return parse_config_pairs(pairs);
}

TrainConfig load_config(const std::string& path,
                        const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ContractViolation("--set needs key=value, got '" + ov + "'");
    text += "\n" + ov.substr(0, eq) + " = " + ov.substr(eq + 1) + "\n";
  }
  return config_from_text(text);
}

}  // namespace pcc
