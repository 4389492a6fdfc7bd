#include "dyadic/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dyadic::harness {

namespace {

template <typename E>
struct Names {
  E value;
  const char* name;
};

constexpr Names<Experiment> kExperiments[] = {{Experiment::Upper, "upper"},           {Experiment::Lower, "lower"},
                                              {Experiment::SparseDom, "sparse-dom"},  {Experiment::SparseForm, "sparse-form"},
                                              {Experiment::Lemmas, "lemmas"},         {Experiment::KernelValidate, "kernel-validate"}};
constexpr Names<Ensemble> kEnsembles[] = {{Ensemble::Constant, "constant"},
                                          {Ensemble::TwoValued, "two-valued"},
                                          {Ensemble::Power, "power"},
                                          {Ensemble::DyadicMartingale, "dyadic-martingale"}};
constexpr Names<BSampler> kSamplers[] = {
    {BSampler::Martingale, "martingale"}, {BSampler::Sinusoid, "sinusoid"}, {BSampler::Jumps, "jumps"}, {BSampler::Mixed, "mixed"}};
constexpr Names<FormStudy> kStudies[] = {{FormStudy::Fractional, "fractional"}, {FormStudy::Bloom, "bloom"}};

template <typename E, std::size_t N>
std::string name_of(const Names<E> (&table)[N], E v) {
  for (const auto& n : table)
    if (n.value == v) return n.name;
  return "?";
}

template <typename E, std::size_t N>
E parse_name(const Names<E> (&table)[N], const std::string& s, const char* what) {
  for (const auto& n : table)
    if (s == n.name) return n.value;
  std::string opts;
  for (const auto& n : table) opts += std::string(opts.empty() ? "" : "|") + n.name;
  throw Error(std::string("config: unknown ") + what + " '" + s + "' (expected " + opts + ")");
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return kInfinity;
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw Error("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw Error("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error("config: " + key + " expects a boolean, got '" + v + "'");
}

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(q * static_cast<double>(v.size())) - 1.0));
  return v[std::min(idx, v.size() - 1)];
}

}  // namespace

std::string to_string(Experiment e) { return name_of(kExperiments, e); }
std::string to_string(Ensemble e) { return name_of(kEnsembles, e); }
std::string to_string(BSampler b) { return name_of(kSamplers, b); }
std::string to_string(FormStudy s) { return name_of(kStudies, s); }
Experiment parse_experiment(const std::string& s) { return parse_name(kExperiments, s, "experiment"); }
Ensemble parse_ensemble(const std::string& s) { return parse_name(kEnsembles, s, "ensemble"); }
BSampler parse_sampler(const std::string& s) { return parse_name(kSamplers, s, "b sampler"); }
FormStudy parse_study(const std::string& s) { return parse_name(kStudies, s, "study"); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

KernelSpec ExperimentConfig::kernel() const {
  KernelSpec k = kernel_exponent > 0 ? KernelSpec::with_exponent(dim, kernel_exponent) : KernelSpec::reference(dim);
  k.diagonal = diagonal;
  k.epsilon = kernel_epsilon;
  return k;
}

void ExperimentConfig::validate() const {
  if (dim != 1 && dim != 2) throw Error("config: dim must be 1 or 2");
  if (levels < 1) throw Error("config: levels must be >= 1");
  if (trials < 0) throw Error("config: trials must be >= 0");
  if (!(char_cap > 1)) throw Error("config: char_cap must exceed 1");
  if (!(jump_ratio >= 1)) throw Error("config: jump_ratio must be >= 1");
  if (!(localize >= 0 && localize <= 1)) throw Error("config: localize must lie in [0,1]");
  if (!(partner_a >= 3)) throw Error("config: partner_a must be >= 3");
  if (ascent_iterations < 1 || ascent_restarts < 1) throw Error("config: ascent needs at least one iteration and restart");
  if (experiment != Experiment::KernelValidate && experiment != Experiment::Lemmas) exponents.validate();
  const bool needs_operator = experiment == Experiment::Upper || experiment == Experiment::Lower || experiment == Experiment::SparseDom;
  if (needs_operator && levels > resolution_cap(dim))
    throw Error("config: levels " + std::to_string(levels) + " exceeds the resolution cap " + std::to_string(resolution_cap(dim)));
  if (experiment == Experiment::Lower && exponents.k1 < 1) throw Error("config: lower needs k1 >= 1");
  if (experiment == Experiment::SparseForm) {
    if (study == FormStudy::Fractional && exponents.beta1() < 0) throw Error("config: the fractional form needs p1 <= q1");
    if (study == FormStudy::Bloom && exponents.k1 < 1) throw Error("config: the bloom form needs k1 >= 1");
  }
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  auto& e = cfg.exponents;
  if (key == "experiment") cfg.experiment = parse_experiment(v);
  else if (key == "dim") cfg.dim = static_cast<int>(to_int(key, v));
  else if (key == "levels") cfg.levels = static_cast<int>(to_int(key, v));
  else if (key == "trials") cfg.trials = static_cast<int>(to_int(key, v));
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "p1") e.p1 = to_double(key, v);
  else if (key == "p2") e.p2 = to_double(key, v);
  else if (key == "q1") e.q1 = to_double(key, v);
  else if (key == "r1") e.r1 = to_double(key, v);
  else if (key == "r2") e.r2 = to_double(key, v);
  else if (key == "s") e.s = to_double(key, v);
  else if (key == "k1") e.k1 = static_cast<int>(to_int(key, v));
  else if (key == "ensemble") cfg.ensemble = parse_ensemble(v);
  else if (key == "char_cap") cfg.char_cap = to_double(key, v);
  else if (key == "max_resamples") cfg.max_resamples = static_cast<int>(to_int(key, v));
  else if (key == "power_max") cfg.power_max = to_double(key, v);
  else if (key == "jump_ratio") cfg.jump_ratio = to_double(key, v);
  else if (key == "volatility") cfg.volatility = to_double(key, v);
  else if (key == "b_sampler") cfg.b_sampler = parse_sampler(v);
  else if (key == "b_scale") cfg.b_scale = to_double(key, v);
  else if (key == "f1_scale") cfg.f1_scale = to_double(key, v);
  else if (key == "localize") cfg.localize = to_double(key, v);
  else if (key == "kernel_exponent") cfg.kernel_exponent = to_double(key, v);
  else if (key == "diagonal") {
    if (v == "exclude") cfg.diagonal = DiagonalPolicy::ExcludeCoincident;
    else if (v == "epsilon") cfg.diagonal = DiagonalPolicy::EpsilonRegularize;
    else throw Error("config: diagonal must be exclude|epsilon");
  } else if (key == "kernel_epsilon") cfg.kernel_epsilon = to_double(key, v);
  else if (key == "kernel_samples") cfg.kernel_samples = static_cast<int>(to_int(key, v));
  else if (key == "ascent_iterations") cfg.ascent_iterations = static_cast<int>(to_int(key, v));
  else if (key == "ascent_restarts") cfg.ascent_restarts = static_cast<int>(to_int(key, v));
  else if (key == "partner_a") cfg.partner_a = to_double(key, v);
  else if (key == "study") cfg.study = parse_study(v);
  else if (key == "phi_trials") cfg.phi_trials = static_cast<int>(to_int(key, v));
  else if (key == "mutate") cfg.mutate = to_bool(key, v);
  else if (key == "out") cfg.out = v;
  else throw Error("config: unknown key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key=value");
    apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

//-----------------------------------------------------------------------------

bool RunResult::passed() const {
  return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed(); });
}

double RunResult::max_ratio() const {
  double m = 0;
  for (const auto& r : records)
    if (std::isfinite(r.ratio)) m = std::max(m, r.ratio);
  return m;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string to_csv(const std::vector<TrialRecord>& records) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    const auto& e = r.exponents;
    std::string flags;
    for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + csv_safe(f);
    const double fields[] = {e.p1,         e.p2,          e.q1,       e.r1,       e.r2,  e.s,  static_cast<double>(e.k1),
                             e.alpha1(),   r.apr_char,    r.ainfty_char, r.bmo_norm, r.aux_norm, r.lhs, r.rhs,
                             r.ratio};
    out += std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' + csv_safe(r.ensemble);
    for (double f : fields) out += ',' + format_number(f);
    out += ',' + flags + '\n';
  }
  return out;
}

std::string to_report(const RunResult& result) {
  const auto& cfg = result.config;
  std::ostringstream os;
  os << "# " << to_string(cfg.experiment) << " run\n\n";
  if (cfg.experiment == Experiment::Lower)
    os << "The operator norm in the rhs column is a lower estimate: the larger of an alternating exact-dual ascent ("
       << cfg.ascent_iterations << " iterations, " << cfg.ascent_restarts
       << " restarts) and the median test-function quotient. Norms are strong L^q.\n\n";
  os << "| key | value |\n|---|---|\n";
  os << "| dim | " << cfg.dim << " |\n| levels | " << cfg.levels << " |\n| trials | " << cfg.trials << " |\n";
  os << "| seed | " << cfg.seed << " |\n";
  const auto& e = cfg.exponents;
  os << "| exponents | p1=" << format_number(e.p1) << " p2=" << format_number(e.p2) << " q1=" << format_number(e.q1)
     << " r1=" << format_number(e.r1) << " r2=" << format_number(e.r2) << " s=" << format_number(e.s) << " k1=" << e.k1
     << " |\n";
  os << "| ensemble | " << to_string(cfg.ensemble) << " |\n| b sampler | " << to_string(cfg.b_sampler) << " |\n";
  os << "| b scale | " << format_number(cfg.b_scale) << " |\n| localize | " << format_number(cfg.localize) << " |\n";
  for (const auto& [k, v] : result.metadata) os << "| " << k << " | " << v << " |\n";

  std::vector<double> ratios;
  int degenerate = 0;
  for (const auto& r : result.records) {
    if (std::find(r.flags.begin(), r.flags.end(), "degenerate") != r.flags.end()) {
      ++degenerate;
      continue;
    }
    if (std::isfinite(r.ratio)) ratios.push_back(r.ratio);
  }
  if (!result.records.empty()) {
    os << "\n## Ratios\n\n| records | degenerate | max | median | p95 |\n|---|---|---|---|---|\n";
    os << "| " << result.records.size() << " | " << degenerate << " | "
       << format_number(ratios.empty() ? std::nan("") : *std::max_element(ratios.begin(), ratios.end())) << " | "
       << format_number(percentile(ratios, 0.5)) << " | " << format_number(percentile(ratios, 0.95)) << " |\n";
  }
  if (!result.suites.empty()) {
    os << "\n## Suites\n\n| suite | kind | cases | violations | min ratio | max ratio | result |\n|---|---|---|---|---|---|---|\n";
    for (const auto& s : result.suites)
      os << "| " << s.name << " | " << (s.exact ? "exact" : "ratio study") << " | " << s.cases << " | " << s.violations << " | "
         << format_number(s.min_ratio) << " | " << format_number(s.max_ratio) << " | " << (s.passed() ? "pass" : "FAIL") << " |\n";
    for (const auto& s : result.suites)
      if (!s.witness.empty()) os << "\n" << s.name << " witness: " << s.witness << "\n";
  }
  if (!result.log.empty()) {
    os << "\n## Log\n\n";
    const std::size_t shown = std::min<std::size_t>(result.log.size(), 40);
    for (std::size_t i = 0; i < shown; ++i) os << "- " << result.log[i] << "\n";
    if (shown < result.log.size()) os << "- (" << result.log.size() - shown << " more)\n";
  }
  return os.str();
}

std::string write_outputs(const RunResult& result) {
  const auto& cfg = result.config;
  if (cfg.out.empty()) return "";
  std::filesystem::create_directories(cfg.out);
  const std::filesystem::path base = std::filesystem::path(cfg.out) / to_string(cfg.experiment);
  const std::string csv = base.string() + ".csv";
  {
    std::ofstream f(csv, std::ios::binary);
    f << to_csv(result.records);
    if (!f) throw Error("cannot write " + csv);
  }
  std::ofstream md(base.string() + ".md", std::ios::binary);
  md << to_report(result);
  return csv;
}

}  // namespace dyadic::harness
