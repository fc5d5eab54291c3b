#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "zsfse/masking.hpp"
#include "zsfse/recon.hpp"
#include "zsfse/signal_model.hpp"

namespace zs {

struct DataConfig
{
  Index width = 64;
  Index height = 64;
  Index coils = 4;
  SequenceParams seq{};
  double t1 = 1000.0;
  double noiseFraction = 0.01; // noise sigma as a fraction of max |Y|
};

struct SubspaceConfig
{
  Index rank = 3;
  double t2Min = 5.0;
  double t2Max = 400.0;
  Index t2Count = 256;
};

/// Seeds of every random component, derived from one run seed unless set.
struct Seeds
{
  std::uint64_t phantom = 0;
  std::uint64_t coils = 0;
  std::uint64_t noise = 0;
  std::uint64_t mask = 0;
  std::uint64_t training = 0;

  static auto Derive(std::uint64_t run) -> Seeds;
};

/*
 * Everything a run needs. Stored as INI text with sections [run], [data],
 * [acquisition], [subspace], [unroll], [shuffling]; unknown sections or keys
 * are rejected and every default is written back out.
 */
struct RunConfig
{
  std::uint64_t seed = 1;
  DataConfig data{};
  AcqSpec acquisition{};
  SubspaceConfig subspace{};
  UnrollConfig unroll{};
  ShufflingConfig shuffling{};

  RunConfig() { finalize(); }

  auto seeds() const -> Seeds { return Seeds::Derive(seed); }
  /// Copy shared shapes and derived seeds into the per-module configs.
  /// Parse does this; call it again after changing fields in code.
  void finalize();
  void validate() const;

  /// Canonical INI text; Parse(ToIni(c)) == c.
  auto toIni() const -> std::string;
  static auto Parse(std::string const &ini) -> RunConfig;
  static auto Load(std::filesystem::path const &path) -> RunConfig;
};

} // namespace zs
