#include "zsfse/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "zsfse/io.hpp"
#include "zsfse/recon.hpp"

namespace zs {

using Json = nlohmann::ordered_json;

namespace {

constexpr char const *kManifest = "manifest.json";
constexpr char const *kConfig = "config.ini";

void PrepareOut(fs::path const &out, bool force)
{
  if (out.empty()) { throw ConfigError("an output directory is required"); }
  if (fs::exists(out) && !fs::is_empty(out) && !force) {
    throw IoError(fmt::format("{} exists and is not empty; pass --force to overwrite", out.string()));
  }
  fs::create_directories(out);
}

void WriteText(fs::path const &path, std::string const &text)
{
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) { throw IoError(fmt::format("cannot write {}", path.string())); }
  f << text;
}

auto ReadText(fs::path const &path) -> std::string
{
  std::ifstream f(path, std::ios::binary);
  if (!f) { throw IoError(fmt::format("missing file {}", path.string())); }
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

auto ReadManifest(fs::path const &dir) -> Json
{
  try {
    return Json::parse(ReadText(dir / kManifest));
  } catch (Json::exception const &e) {
    throw IoError(fmt::format("{}: malformed manifest ({})", (dir / kManifest).string(), e.what()));
  }
}

/// Records digests of everything it writes so the manifest can list them.
struct Writer
{
  fs::path dir;
  Json files = Json::object();
  Json pngs = Json::object();

  void array(std::string const &name, RawArray const &a)
  {
    SaveArray(dir / name, a);
    files[name] = Sha256File(dir / (name + ".raw"));
  }

  void png(std::string const &name, ReImage const &im)
  {
    fs::create_directories(dir / "png");
    auto const w = WritePng(dir / "png" / (name + ".png"), im);
    pngs[name] = Json{{"window_min", w.lo}, {"window_max", w.hi}};
  }

  void text(std::string const &name, std::string const &body)
  {
    WriteText(dir / name, body);
    files[name] = Sha256Hex(body.data(), body.size());
  }
};

auto ConfigDigest(RunConfig const &cfg) -> std::string
{
  auto const ini = cfg.toIni();
  return Sha256Hex(ini.data(), ini.size());
}

auto ToReal(BoolImage const &b) -> ReImage { return b.cast<double>(); }

auto SimulateFull(RunConfig const &cfg, EchoSeriesKSpace *full, double *sigma) -> Dataset
{
  cfg.validate();
  Seeds const seeds = cfg.seeds();
  Dataset ds;
  ds.config = cfg;
  ds.phantom = MakePhantom(cfg.data.width, cfg.data.height, seeds.phantom);
  ds.sens = MakeSensMaps(cfg.data.coils, cfg.data.width, cfg.data.height, seeds.coils);
  auto clean = SimulateKSpace(ds.phantom, cfg.data.seq, ds.sens, 0.0, 0, cfg.data.t1);
  double const s = cfg.data.noiseFraction * MaxKSpaceMagnitude(clean.kspace);
  if (s > 0.0) { clean = SimulateKSpace(ds.phantom, cfg.data.seq, ds.sens, s, seeds.noise, cfg.data.t1); }
  ds.truth = std::move(clean.truth);
  ds.y = ApplyMask(clean.kspace, GenShufflingMask(cfg.acquisition));
  if (full) { *full = std::move(clean.kspace); }
  if (sigma) { *sigma = s; }
  return ds;
}

auto LossCsv(std::vector<double> const &loss) -> std::string
{
  std::string s = "step,loss\n";
  for (size_t i = 0; i < loss.size(); i++) { s += fmt::format("{},{:.17g}\n", i, loss[i]); }
  return s;
}

auto StageJson(StageResult const &st) -> Json
{
  return Json{{"name", st.stage},
              {"steps", st.loss.size()},
              {"param_step", st.params.step},
              {"init_seed", st.params.seed},
              {"arch", st.params.arch.describe()},
              {"validation_start", st.validationStart},
              {"validation_end", st.validationEnd},
              {"loss", st.loss}};
}

void SaveStage(Writer &w, StageResult const &st)
{
  fs::create_directories(w.dir / "checkpoints");
  SaveCheckpoint(w.dir / "checkpoints" / st.stage, st.params);
  w.files["checkpoints/" + st.stage] = Sha256File(w.dir / "checkpoints" / (st.stage + ".bin"));
  w.text("loss_" + st.stage + ".csv", LossCsv(st.loss));
}

void RunOne(Method method, MapSource maps, RunConfig const &cfg, Dataset const &ds, Model const &model,
            Json const &datasetFiles, fs::path const &dir, bool force)
{
  PrepareOut(dir, force);
  Writer w{dir};
  Json stages = Json::array();
  SensMaps const sens =
    maps == MapSource::Truth ? ds.sens : CalibLowresMaps(ds.y, cfg.acquisition.centerLines);
  std::optional<CoeffMaps> alpha;
  EchoImages images;

  switch (method) {
  case Method::ZeroFilled:
    alpha = ReconZeroFilled(ds.y, model.basis, sens);
    break;
  case Method::Shuffling: {
    auto r = ReconShuffling(ds.y, model.basis, sens, cfg.shuffling);
    alpha = std::move(r.alpha);
    w.text("objective_fista.csv", LossCsv(r.objective));
    stages.push_back(Json{{"name", "fista"}, {"objective", r.objective}});
    break;
  }
  case Method::Ssdu: {
    auto st = ReconSsduPerEcho(ds.y, sens, cfg.unroll);
    images = std::move(st.images);
    SaveStage(w, st);
    stages.push_back(StageJson(st));
    break;
  }
  case Method::ZsSub: {
    auto st = TrainImageStage(ds.y, model.basis, sens, cfg.unroll, "I1");
    alpha = std::move(st.alpha);
    SaveStage(w, st);
    stages.push_back(StageJson(st));
    break;
  }
  case Method::ZsJoint: {
    JointOptions jo;
    jo.centerLines = cfg.acquisition.centerLines;
    auto jr = RunJointPipeline(ds.y, model.basis, cfg.unroll, jo);
    alpha = std::move(jr.alpha);
    for (auto const &st : jr.stages) {
      SaveStage(w, st);
      stages.push_back(StageJson(st));
    }
    // The first stage alone is the subspace reconstruction with calibration maps.
    w.array("images_I1", ToRaw(Expand(model.basis, jr.stages.front().alpha)));
    w.array("sens", ToRaw(jr.sens));
    w.array("sens_calibration", ToRaw(jr.calibration));
    w.png("sens_coil0", jr.sens[0].abs());
    break;
  }
  }
  if (alpha) {
    images = Expand(model.basis, *alpha);
    w.array("alpha", ToRaw(*alpha));
  }
  w.array("images", ToRaw(images));
  w.png("echo0", images[0].abs());
  w.png(fmt::format("echo{}", images.size() - 1), images[images.size() - 1].abs());

  bool const joint = method == Method::ZsJoint;
  Json m{{"command", "recon"},
         {"method", MethodName(method)},
         {"maps", joint ? "estimated" : (maps == MapSource::Truth ? "truth" : "calibration")},
         {"seed", cfg.seed},
         {"center_lines", cfg.acquisition.centerLines},
         {"config_sha256", ConfigDigest(cfg)},
         {"config", cfg.toIni()},
         {"dataset", datasetFiles},
         {"stage_order", Json::array()},
         {"stages", stages},
         {"files", w.files},
         {"png", w.pngs},
         {"rerun", fmt::format("zsfse recon --config {} --method {}{} --in <dataset> --out <dir>", kConfig,
                               MethodName(method), joint ? "" : (maps == MapSource::Truth ? "" : " --maps calibration"))}};
  for (auto const &s : stages) { m["stage_order"].push_back(s["name"]); }
  WriteText(dir / kConfig, cfg.toIni());
  WriteText(dir / kManifest, m.dump(2) + "\n");
}

auto Mean(std::vector<double> const &v) -> double
{
  double s = 0.0;
  for (double x : v) { s += x; }
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

auto Std(std::vector<double> const &v) -> double
{
  if (v.size() < 2) { return 0.0; }
  double const m = Mean(v);
  double s = 0.0;
  for (double x : v) { s += (x - m) * (x - m); }
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

auto ResultDirs(fs::path const &p) -> std::vector<fs::path>
{
  if (fs::exists(p / kManifest)) { return {p}; }
  if (!fs::is_directory(p)) { throw IoError(fmt::format("no results at {}", p.string())); }
  std::vector<fs::path> dirs;
  for (auto const &e : fs::directory_iterator(p)) {
    if (e.is_directory() && e.path().filename().string().starts_with("repeat_") && fs::exists(e.path() / kManifest)) {
      dirs.push_back(e.path());
    }
  }
  if (dirs.empty()) { throw IoError(fmt::format("no manifest under {}", p.string())); }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

} // namespace

auto BuildModel(RunConfig const &cfg) -> Model
{
  Model m;
  m.dict = BuildDictionary(cfg.data.seq, LogSpacedT2Grid(cfg.subspace.t2Min, cfg.subspace.t2Max, cfg.subspace.t2Count),
                           cfg.data.t1);
  m.basis = BuildSubspace(m.dict, cfg.subspace.rank);
  return m;
}

auto SimulateDataset(RunConfig const &cfg) -> Dataset { return SimulateFull(cfg, nullptr, nullptr); }

void CmdSimulate(RunConfig const &cfg, SimulateOptions const &opts)
{
  cfg.validate();
  PrepareOut(opts.out, opts.force);
  EchoSeriesKSpace full;
  double sigma = 0.0;
  auto const ds = SimulateFull(cfg, &full, &sigma);

  Writer w{opts.out};
  w.array("t2", ToRaw(ds.phantom.t2));
  w.array("pd", ToRaw(ds.phantom.pd));
  w.array("support", ToRaw(ToReal(ds.phantom.support)));
  w.array("sens", ToRaw(ds.sens));
  w.array("truth", ToRaw(ds.truth));
  w.array("kspace_full", ToRaw(full));
  w.array("kspace", ToRaw(ds.y));
  w.array("mask", ToRaw(ds.y.mask));
  w.png("pd", ds.phantom.pd);
  w.png("t2", ds.phantom.t2);
  w.png("truth_echo0", ds.truth[0].abs());

  Seeds const s = cfg.seeds();
  Json m{{"command", "simulate"},
         {"seed", cfg.seed},
         {"seeds", {{"phantom", s.phantom}, {"coils", s.coils}, {"noise", s.noise}, {"mask", s.mask}}},
         {"noise_sigma", sigma},
         {"center_lines", cfg.acquisition.centerLines},
         {"config_sha256", ConfigDigest(cfg)},
         {"config", cfg.toIni()},
         {"files", w.files},
         {"png", w.pngs},
         {"rerun", fmt::format("zsfse simulate --config {} --out <dir>", kConfig)}};
  WriteText(opts.out / kConfig, cfg.toIni());
  WriteText(opts.out / kManifest, m.dump(2) + "\n");
}

auto LoadDataset(fs::path const &dir) -> Dataset
{
  auto const m = ReadManifest(dir);
  if (m.value("command", "") != "simulate") { throw IoError(fmt::format("{} is not a simulated dataset", dir.string())); }
  Dataset ds;
  ds.config = RunConfig::Parse(ReadText(dir / kConfig));
  ds.phantom.t2 = RealImageFromRaw(LoadArray(dir / "t2", {"W", "H"}));
  ds.phantom.pd = RealImageFromRaw(LoadArray(dir / "pd", {"W", "H"}));
  ds.phantom.support = RealImageFromRaw(LoadArray(dir / "support", {"W", "H"})) > 0.5;
  ds.sens = SensMapsFromRaw(LoadArray(dir / "sens", {"C", "W", "H"}));
  ds.truth = EchoImagesFromRaw(LoadArray(dir / "truth", {"T", "W", "H"}));
  auto const mask = MaskFromRaw(LoadArray(dir / "mask", {"T", "H"}));
  ds.y = KSpaceFromRaw(LoadArray(dir / "kspace", {"T", "W", "H", "C"}), mask);
  return ds;
}

auto ParseMethod(std::string const &name) -> Method
{
  static std::map<std::string, Method> const methods{{"zero-filled", Method::ZeroFilled},
                                                     {"shuffling", Method::Shuffling},
                                                     {"ssdu", Method::Ssdu},
                                                     {"zs-sub", Method::ZsSub},
                                                     {"zs-joint", Method::ZsJoint}};
  auto const it = methods.find(name);
  if (it == methods.end()) {
    throw ConfigError(fmt::format("unknown method '{}' (zero-filled, shuffling, ssdu, zs-sub, zs-joint)", name));
  }
  return it->second;
}

auto MethodName(Method m) -> std::string
{
  switch (m) {
  case Method::ZeroFilled: return "zero-filled";
  case Method::Shuffling: return "shuffling";
  case Method::Ssdu: return "ssdu";
  case Method::ZsSub: return "zs-sub";
  case Method::ZsJoint: return "zs-joint";
  }
  return "unknown";
}

void CmdRecon(ReconOptions const &opts)
{
  if (opts.repeats < 1) { throw ConfigError("repeats must be >= 1"); }
  auto const ds = LoadDataset(opts.in);
  RunConfig cfg = opts.config ? *opts.config : ds.config;
  // The dataset fixes everything about the acquisition.
  cfg.data = ds.config.data;
  cfg.acquisition = ds.config.acquisition;
  if (opts.seed) { cfg.seed = *opts.seed; }
  cfg.finalize();
  cfg.validate();
  auto const model = BuildModel(cfg);
  Json const datasetFiles = ReadManifest(opts.in).at("files");

  if (opts.repeats == 1) {
    RunOne(opts.method, opts.maps, cfg, ds, model, datasetFiles, opts.out, opts.force);
    return;
  }
  PrepareOut(opts.out, opts.force);
  for (Index r = 0; r < opts.repeats; r++) {
    RunConfig rc = cfg;
    rc.seed = cfg.seed + static_cast<std::uint64_t>(r);
    rc.finalize();
    RunOne(opts.method, opts.maps, rc, ds, model, datasetFiles, opts.out / fmt::format("repeat_{}", r), opts.force);
  }
}

auto CmdEval(EvalOptions const &opts) -> std::vector<EvalRow>
{
  if (opts.results.empty()) { throw ConfigError("eval needs at least one results directory"); }
  auto const truthDs = LoadDataset(opts.truth);
  auto const truthFiles = ReadManifest(opts.truth).at("files");
  auto const model = BuildModel(truthDs.config);
  EvalTruth const truth{truthDs.truth, truthDs.phantom.t2, truthDs.phantom.pd, truthDs.phantom.support};

  std::vector<EvalRow> rows;
  for (auto const &p : opts.results) {
    for (auto const &dir : ResultDirs(p)) {
      auto const m = ReadManifest(dir);
      EvalRow row;
      row.dir = dir;
      row.seed = m.at("seed").get<std::uint64_t>();
      row.centerLines = m.at("center_lines").get<Index>();
      EchoImages est;
      std::string method;
      if (m.at("command") == "simulate") {
        if (m.at("files").at("truth") != truthFiles.at("truth")) {
          throw IoError(fmt::format("{} holds a different phantom than {}", dir.string(), opts.truth.string()));
        }
        method = "truth";
        row.maps = "truth";
        est = EchoImagesFromRaw(LoadArray(dir / "truth", {"T", "W", "H"}));
      } else {
        if (m.at("dataset").at("truth") != truthFiles.at("truth")) {
          throw IoError(fmt::format("{} was reconstructed from a different phantom than {}", dir.string(),
                                    opts.truth.string()));
        }
        method = m.at("method").get<std::string>();
        row.maps = m.at("maps").get<std::string>();
        est = EchoImagesFromRaw(LoadArray(dir / "images", {"T", "W", "H"}));
      }
      row.report = Evaluate(method, est, truth, model.dict);
      row.report.configDigest = m.at("config_sha256").get<std::string>();
      rows.push_back(std::move(row));
    }
  }

  PrepareOut(opts.out, opts.force);
  std::string metrics = "method,maps,center_lines,seed,nmse_i_percent,ssim_i,nmse_t2_percent,config_sha256\n";
  std::vector<MetricReport> reports;
  for (auto const &r : rows) {
    metrics += fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{}\n", r.report.method, r.maps, r.centerLines, r.seed,
                           r.report.nmseI, r.report.ssimI, r.report.nmseT2, r.report.configDigest);
    reports.push_back(r.report);
  }
  WriteText(opts.out / "metrics.csv", metrics);
  std::ostringstream perEcho;
  WritePerEchoCsv(perEcho, reports);
  WriteText(opts.out / "per_echo.csv", perEcho.str());

  // Aggregations keep first-appearance order so the output is stable.
  auto aggregate = [&](auto key, std::string header, auto label) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<EvalRow const *>> groups;
    for (auto const &r : rows) {
      auto const k = key(r);
      if (!groups.contains(k)) { order.push_back(k); }
      groups[k].push_back(&r);
    }
    std::string out = header;
    for (auto const &k : order) {
      std::vector<double> n, s, t;
      for (auto const *r : groups[k]) {
        n.push_back(r->report.nmseI);
        s.push_back(r->report.ssimI);
        t.push_back(r->report.nmseT2);
      }
      out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", label(*groups[k].front()), n.size(),
                         Mean(n), Std(n), Mean(s), Std(s), Mean(t), Std(t));
    }
    return out;
  };
  std::string const stats = "nmse_i_mean,nmse_i_std,ssim_i_mean,ssim_i_std,nmse_t2_mean,nmse_t2_std\n";
  WriteText(opts.out / "table.csv",
            aggregate([](EvalRow const &r) { return r.report.method + "|" + r.maps; }, "method,maps,n," + stats,
                      [](EvalRow const &r) { return r.report.method + "," + r.maps; }));
  WriteText(opts.out / "sweep.csv",
            aggregate([](EvalRow const &r) { return fmt::format("{}|{}|{}", r.report.method, r.maps, r.centerLines); },
                      "method,maps,center_lines,n," + stats,
                      [](EvalRow const &r) { return fmt::format("{},{},{}", r.report.method, r.maps, r.centerLines); }));
  return rows;
}

} // namespace zs
