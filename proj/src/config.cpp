#include "zsfse/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace zs {

auto Seeds::Derive(std::uint64_t run) -> Seeds
{
  // Fixed odd offsets keep the streams of different components apart.
  return Seeds{run, run + 1000003u, run + 2000003u, run + 3000017u, run + 4000037u};
}

namespace {

auto Format(double v) -> std::string { return fmt::format("{}", v); }
auto Format(Index v) -> std::string { return fmt::format("{}", v); }
auto Format(std::uint64_t v) -> std::string { return fmt::format("{}", v); }
auto Format(bool v) -> std::string { return v ? "true" : "false"; }
auto Format(Precision p) -> std::string { return p == Precision::Single ? "single" : "double"; }

template <typename F>
auto Convert(std::string const &key, std::string const &v, F f)
{
  try {
    size_t used = 0;
    auto r = f(v, &used);
    if (used != v.size()) { throw std::invalid_argument("trailing characters"); }
    return r;
  } catch (std::exception const &) {
    throw ConfigError(fmt::format("{}: cannot parse '{}'", key, v));
  }
}

void ParseInto(std::string const &key, std::string const &v, double &out)
{
  out = Convert(key, v, [](std::string const &s, size_t *n) { return std::stod(s, n); });
}
void ParseInto(std::string const &key, std::string const &v, Index &out)
{
  out = Convert(key, v, [](std::string const &s, size_t *n) { return static_cast<Index>(std::stoll(s, n)); });
}
void ParseInto(std::string const &key, std::string const &v, std::uint64_t &out)
{
  if (!v.empty() && v.front() == '-') { throw ConfigError(fmt::format("{}: seeds are non-negative", key)); }
  out = Convert(key, v, [](std::string const &s, size_t *n) { return static_cast<std::uint64_t>(std::stoull(s, n)); });
}
void ParseInto(std::string const &key, std::string const &v, bool &out)
{
  if (v == "true" || v == "1") {
    out = true;
  } else if (v == "false" || v == "0") {
    out = false;
  } else {
    throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, v));
  }
}
void ParseInto(std::string const &key, std::string const &v, Precision &out)
{
  if (v == "single") {
    out = Precision::Single;
  } else if (v == "double") {
    out = Precision::Double;
  } else {
    throw ConfigError(fmt::format("{}: expected single or double, got '{}'", key, v));
  }
}

struct Field
{
  std::string section;
  std::string key;
  std::function<std::string(RunConfig const &)> get;
  std::function<void(RunConfig &, std::string const &)> set;
};

#define ZS_FIELD(sec, name, member)                                                                                    \
  Field                                                                                                                \
  {                                                                                                                    \
    sec, name, [](RunConfig const &c) { return Format(c.member); },                                                    \
      [](RunConfig &c, std::string const &v) { ParseInto(sec "." name, v, c.member); }                                \
  }

auto Fields() -> std::vector<Field> const &
{
  static std::vector<Field> const fields{
    ZS_FIELD("run", "seed", seed),
    ZS_FIELD("data", "width", data.width),
    ZS_FIELD("data", "height", data.height),
    ZS_FIELD("data", "coils", data.coils),
    ZS_FIELD("data", "echoes", data.seq.echoCount),
    ZS_FIELD("data", "echo_spacing_ms", data.seq.echoSpacing),
    ZS_FIELD("data", "refocus_deg", data.seq.refocusAngle),
    ZS_FIELD("data", "excitation_deg", data.seq.excitationAngle),
    ZS_FIELD("data", "t1_ms", data.t1),
    ZS_FIELD("data", "noise_fraction", data.noiseFraction),
    ZS_FIELD("acquisition", "lines_per_echo", acquisition.linesPerEcho),
    ZS_FIELD("acquisition", "center_lines", acquisition.centerLines),
    ZS_FIELD("subspace", "rank", subspace.rank),
    ZS_FIELD("subspace", "t2_min_ms", subspace.t2Min),
    ZS_FIELD("subspace", "t2_max_ms", subspace.t2Max),
    ZS_FIELD("subspace", "t2_count", subspace.t2Count),
    ZS_FIELD("unroll", "blocks", unroll.nBlocks),
    ZS_FIELD("unroll", "mu_i", unroll.muI),
    ZS_FIELD("unroll", "mu_c", unroll.muC),
    ZS_FIELD("unroll", "lambda_c", unroll.lambdaC),
    ZS_FIELD("unroll", "steps_per_stage", unroll.stepsPerStage),
    ZS_FIELD("unroll", "lr_i1", unroll.lrI1),
    ZS_FIELD("unroll", "lr_i1_late", unroll.lrI1Late),
    ZS_FIELD("unroll", "lr_decay_step", unroll.lrDecayStep),
    ZS_FIELD("unroll", "lr_i2", unroll.lrI2),
    ZS_FIELD("unroll", "lr_c1", unroll.lrC1),
    ZS_FIELD("unroll", "cg_max_iters", unroll.cg.maxIters),
    ZS_FIELD("unroll", "cg_tolerance", unroll.cg.tolerance),
    ZS_FIELD("unroll", "hidden_channels", unroll.hidden),
    ZS_FIELD("unroll", "residual_blocks", unroll.netBlocks),
    ZS_FIELD("unroll", "precision", unroll.precision),
    ZS_FIELD("unroll", "lambda_over_theta", unroll.partition.lambdaOverTheta),
    ZS_FIELD("unroll", "lambda_sigma_fraction", unroll.partition.sigmaFraction),
    ZS_FIELD("unroll", "inherit_i2", unroll.inheritI2),
    ZS_FIELD("unroll", "ssdu_echo_batch", unroll.ssduEchoBatch),
    ZS_FIELD("unroll", "ssdu_infer_batch", unroll.ssduInferBatch),
    ZS_FIELD("unroll", "input_peak", unroll.inputPeak),
    ZS_FIELD("shuffling", "relative_l1", shuffling.relativeL1),
    ZS_FIELD("shuffling", "max_iters", shuffling.fista.maxIters),
    ZS_FIELD("shuffling", "wavelet_levels", shuffling.fista.levels),
  };
  return fields;
}

#undef ZS_FIELD

} // namespace

void RunConfig::finalize()
{
  RunConfig &c = *this;
  c.acquisition.height = c.data.height;
  c.acquisition.echoes = c.data.seq.echoCount;
  c.acquisition.seed = c.seeds().mask;
  c.unroll.seed = c.seeds().training;
  c.unroll.partition.acsLines = c.acquisition.centerLines;
  c.unroll.partition.seed = c.seeds().training;
}

void RunConfig::validate() const
{
  RunConfig c = *this;
  c.finalize();
  if (c.data.width < 4 || c.data.height < 4) { throw ConfigError("image must be at least 4 x 4"); }
  if (c.data.coils < 1) { throw ConfigError("need at least one coil"); }
  if (!(c.data.noiseFraction >= 0.0)) { throw ConfigError("noise fraction must be >= 0"); }
  if (c.subspace.rank < 1 || c.subspace.rank > c.data.seq.echoCount) {
    throw ConfigError(fmt::format("subspace rank must be in [1, {}]", c.data.seq.echoCount));
  }
  if (c.subspace.t2Count < c.subspace.rank) { throw ConfigError("dictionary smaller than the subspace rank"); }
  try {
    c.data.seq.validate();
    c.acquisition.validate();
    c.unroll.validate();
    c.shuffling.fista.validate();
    LogSpacedT2Grid(c.subspace.t2Min, c.subspace.t2Max, c.subspace.t2Count);
  } catch (InvalidArgument const &e) {
    throw ConfigError(e.what());
  }
  if (!(c.shuffling.relativeL1 > 0.0)) { throw ConfigError("shuffling.relative_l1 must be positive"); }
}

auto RunConfig::toIni() const -> std::string
{
  std::string out;
  std::string section;
  for (auto const &f : Fields()) {
    if (f.section != section) {
      out += fmt::format("{}[{}]\n", section.empty() ? "" : "\n", f.section);
      section = f.section;
    }
    out += fmt::format("{} = {}\n", f.key, f.get(*this));
  }
  return out;
}

auto RunConfig::Parse(std::string const &ini) -> RunConfig
{
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream is(ini);
    pt::read_ini(is, tree);
  } catch (pt::ini_parser_error const &e) {
    throw ConfigError(fmt::format("malformed config: {}", e.message()));
  }
  std::map<std::string, Field const *> byName;
  std::set<std::string> sections;
  for (auto const &f : Fields()) {
    byName[f.section + "." + f.key] = &f;
    sections.insert(f.section);
  }
  RunConfig c;
  for (auto const &[sec, body] : tree) {
    if (!sections.contains(sec)) {
      if (body.empty()) { throw ConfigError(fmt::format("config: key '{}' outside any section", sec)); }
      throw ConfigError(fmt::format("config: unknown section [{}]", sec));
    }
    for (auto const &[key, value] : body) {
      auto const it = byName.find(sec + "." + key);
      if (it == byName.end()) { throw ConfigError(fmt::format("config: unknown key '{}' in [{}]", key, sec)); }
      it->second->set(c, value.get_value<std::string>());
    }
  }
  c.finalize();
  c.validate();
  return c;
}

auto RunConfig::Load(std::filesystem::path const &path) -> RunConfig
{
  std::ifstream f(path);
  if (!f) { throw ConfigError(fmt::format("cannot read config {}", path.string())); }
  std::stringstream ss;
  ss << f.rdbuf();
  return Parse(ss.str());
}

} // namespace zs
