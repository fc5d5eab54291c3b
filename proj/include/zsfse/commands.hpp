#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zsfse/config.hpp"
#include "zsfse/metrics.hpp"
#include "zsfse/phantom.hpp"

namespace zs {

namespace fs = std::filesystem;

/// Dictionary and subspace basis implied by a run configuration.
struct Model
{
  Dictionary dict;
  SubspaceBasis basis;
};

auto BuildModel(RunConfig const &cfg) -> Model;

/// A simulated scan as written by CmdSimulate.
struct Dataset
{
  RunConfig config;
  Phantom phantom;
  SensMaps sens;
  EchoImages truth;
  EchoSeriesKSpace y; // under-sampled
};

auto SimulateDataset(RunConfig const &cfg) -> Dataset;
auto LoadDataset(fs::path const &dir) -> Dataset;

struct SimulateOptions
{
  fs::path out;
  bool force = false;
};

/// Writes phantom maps, coil maps, full and masked k-space, mask, truth
/// images, PNG previews, config.ini and manifest.json.
void CmdSimulate(RunConfig const &cfg, SimulateOptions const &opts);

enum class Method
{
  ZeroFilled,
  Shuffling,
  Ssdu,
  ZsSub,
  ZsJoint
};

auto ParseMethod(std::string const &name) -> Method;
auto MethodName(Method m) -> std::string;

enum class MapSource
{
  Truth,
  Calibration
};

struct ReconOptions
{
  Method method = Method::ZsSub;
  fs::path in;
  fs::path out;
  std::optional<RunConfig> config; // defaults to the dataset's config
  std::optional<std::uint64_t> seed; // overrides the run seed for training
  MapSource maps = MapSource::Truth; // ignored by zs-joint
  Index repeats = 5;
  bool force = false;
};

/// Runs one method; with repeats > 1 each repeat (seed + r) writes to
/// out/repeat_<r>.
void CmdRecon(ReconOptions const &opts);

struct EvalOptions
{
  std::vector<fs::path> results; // result dirs, or parents of repeat_* dirs
  fs::path truth;
  fs::path out;
  bool force = false;
};

struct EvalRow
{
  MetricReport report;
  std::string maps;
  Index centerLines = 0;
  std::uint64_t seed = 0;
  fs::path dir;
};

/// Writes metrics.csv (one row per result), table.csv (mean / std per
/// method), per_echo.csv and sweep.csv (one row per method and
/// calibration-line setting). Returns the per-result rows.
auto CmdEval(EvalOptions const &opts) -> std::vector<EvalRow>;

} // namespace zs
