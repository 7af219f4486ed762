#include "kpf/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "kpf/matrix_io.hpp"
#include "kpf/rng.hpp"

namespace kpf {

std::string Method::label() const {
  switch (kind) {
    case MethodKind::Kpf: return "kpf";
    case MethodKind::KpfAlpha: return "kpf_alpha(" + std::to_string(param) + ")";
    case MethodKind::RduRank: return "rdu_rank(" + std::to_string(param) + ")";
    case MethodKind::Mle: return "mle";
  }
  return "?";
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const std::string t = trim(v);
  int base = 10;
  const char* first = t.data();
  if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
    base = 16;
    first += 2;
  }
  auto res = std::from_chars(first, t.data() + t.size(), out, base);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    return io::parse_double(v);
  } catch (const InputError&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : v) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if ((c == ',' || c == ' ') && depth == 0) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace

Method parse_method(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "kpf") return {MethodKind::Kpf, 0};
  if (s == "mle") return {MethodKind::Mle, 0};
  auto with_param = [&](const std::string& name, MethodKind kind) -> std::optional<Method> {
    if (s.rfind(name, 0) != 0) return std::nullopt;
    std::string rest = s.substr(name.size());
    if (rest.size() >= 2 && rest.front() == '(' && rest.back() == ')')
      rest = rest.substr(1, rest.size() - 2);
    else if (!rest.empty() && rest.front() == ':')
      rest = rest.substr(1);
    else
      throw ConfigError("method '" + s + "': expected " + name + "(k)");
    const std::uint64_t k = parse_u64("methods", rest);
    if (k == 0) throw ConfigError("method '" + s + "': rank parameter must be >= 1");
    return Method{kind, static_cast<std::size_t>(k)};
  };
  if (auto m = with_param("kpf_alpha", MethodKind::KpfAlpha)) return *m;
  if (auto m = with_param("rdu_rank", MethodKind::RduRank)) return *m;
  throw ConfigError("unknown method '" + s + "' (kpf, kpf_alpha(a), rdu_rank(g), mle)");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "p1",        "p2",      "q1",        "q2",           "d",         "n",
      "noise",     "bandwidth", "rho",     "structure_seed", "methods", "replicates",
      "seed_base", "output",  "dbar",      "d_fit",        "record_spectrum", "dump",
      "mle_max_iter", "mle_tol"};
  return keys;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  const auto& keys = config_keys();
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv) {
  const auto& keys = config_keys();
  ExperimentConfig c;
  bool structure_seed_set = false;
  for (const auto& [key, value] : kv) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("unknown key '" + key + "'");
    auto sz = [&] { return static_cast<std::size_t>(parse_u64(key, value)); };
    if (key == "p1") c.dims.p1 = sz();
    else if (key == "p2") c.dims.p2 = sz();
    else if (key == "q1") c.dims.q1 = sz();
    else if (key == "q2") c.dims.q2 = sz();
    else if (key == "d") c.d_true = sz();
    else if (key == "n") {
      c.n_grid.clear();
      for (const auto& t : split_list(value)) c.n_grid.push_back(static_cast<std::size_t>(parse_u64(key, t)));
    } else if (key == "noise") {
      if (trim(value) == "none") {
        c.noise.reset();
      } else {
        NoiseModelSpec spec = c.noise.value_or(NoiseModelSpec{});
        try {
          spec.kind = parse_noise_kind(trim(value));
        } catch (const ArgumentError& e) {
          throw ConfigError(e.what());
        }
        c.noise = spec;
      }
    } else if (key == "bandwidth" || key == "rho" || key == "structure_seed") {
      // applied after the noise kind is known
    } else if (key == "methods") {
      c.methods.clear();
      for (const auto& t : split_list(value)) c.methods.push_back(parse_method(t));
    } else if (key == "replicates") c.replicates = sz();
    else if (key == "seed_base") c.seed_base = parse_u64(key, value);
    else if (key == "output") c.output = trim(value);
    else if (key == "dbar") {
      if (trim(value) == "auto") c.d_bar.reset(); else c.d_bar = sz();
    } else if (key == "d_fit") {
      if (trim(value) == "auto") c.d_fit.reset(); else c.d_fit = sz();
    } else if (key == "record_spectrum") c.record_spectrum = parse_bool(key, value);
    else if (key == "dump") c.dump = parse_bool(key, value);
    else if (key == "mle_max_iter") c.mle_max_iter = sz();
    else if (key == "mle_tol") c.mle_tol = parse_real(key, value);
  }
  if (c.noise) {
    if (auto it = kv.find("bandwidth"); it != kv.end())
      c.noise->bandwidth = static_cast<std::size_t>(parse_u64("bandwidth", it->second));
    if (auto it = kv.find("rho"); it != kv.end()) c.noise->rho = parse_real("rho", it->second);
    if (auto it = kv.find("structure_seed"); it != kv.end()) {
      c.noise->structure_seed = parse_u64("structure_seed", it->second);
      structure_seed_set = true;
    }
    if (!structure_seed_set) c.noise->structure_seed = derive_seed(c.seed_base, 3);
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  try {
    dims.validate();
    if (noise) noise->validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (methods.empty()) throw ConfigError("methods must be nonempty");
  if (n_grid.empty()) throw ConfigError("n must list at least one sample size");
  for (std::size_t n : n_grid)
    if (n < dims.q()) throw ConfigError("n=" + std::to_string(n) + " is below q1*q2");
  if (d_true < 1 || d_true > std::min(dims.p1 * dims.q1, dims.p2 * dims.q2))
    throw ConfigError("d out of range for the given dimensions");
  for (const auto& m : methods) {
    if (m.kind == MethodKind::KpfAlpha && m.param > std::min(dims.p1, dims.p2))
      throw ConfigError(m.label() + ": alpha exceeds min(p1, p2)");
    if (m.kind == MethodKind::RduRank && m.param > std::min(dims.p(), dims.q()))
      throw ConfigError(m.label() + ": gamma exceeds min(p1p2, q1q2)");
  }
  if (mle_tol <= 0.0) throw ConfigError("mle_tol must be positive");
}

std::map<std::string, std::string> config_to_map(const ExperimentConfig& c) {
  std::map<std::string, std::string> kv;
  kv["p1"] = std::to_string(c.dims.p1);
  kv["p2"] = std::to_string(c.dims.p2);
  kv["q1"] = std::to_string(c.dims.q1);
  kv["q2"] = std::to_string(c.dims.q2);
  kv["d"] = std::to_string(c.d_true);
  std::string ns, ms;
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) ns += (i ? "," : "") + std::to_string(c.n_grid[i]);
  for (std::size_t i = 0; i < c.methods.size(); ++i) ms += (i ? "," : "") + c.methods[i].label();
  kv["n"] = ns;
  kv["methods"] = ms;
  if (c.noise) {
    kv["noise"] = to_string(c.noise->kind);
    kv["bandwidth"] = std::to_string(c.noise->bandwidth);
    kv["rho"] = io::format_double(c.noise->rho);
    kv["structure_seed"] = std::to_string(c.noise->structure_seed);
  } else {
    kv["noise"] = "none";
  }
  kv["replicates"] = std::to_string(c.replicates);
  kv["seed_base"] = std::to_string(c.seed_base);
  kv["output"] = c.output;
  kv["dbar"] = c.d_bar ? std::to_string(*c.d_bar) : "auto";
  kv["d_fit"] = c.d_fit ? std::to_string(*c.d_fit) : "auto";
  kv["record_spectrum"] = c.record_spectrum ? "true" : "false";
  kv["dump"] = c.dump ? "true" : "false";
  kv["mle_max_iter"] = std::to_string(c.mle_max_iter);
  kv["mle_tol"] = io::format_double(c.mle_tol);
  return kv;
}

}  // namespace kpf
