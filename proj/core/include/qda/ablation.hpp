#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qda/train.hpp"

namespace qda {

// Ablation variants; names double as the CLI wire format.
enum class Variant {
  NoSm,
  PlainSm,
  Qsm,
  Stage1Only,
  Stage4Only,
  Stage23Only,
  Multilayer,
  Mmd,
  Cod,
  Rca,
  SingleDomainAug,
  DualDomainAug,
  NoAdapt,
  DannOnly,
  Full,
};

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

// Applies the variant's flag overrides on top of a base configuration.
TrainConfig variant_config(Variant v, TrainConfig base);

struct AblationRow {
  std::string variant;
  std::vector<unsigned long> seeds;
  std::vector<MetricReport> per_seed;
  MetricReport median;
};

// Trains one variant over the given seeds (fresh synthetic domains per seed)
// and reports the per-metric medians. Seeds are shared across variants so
// comparisons are paired.
AblationRow run_variant(Variant v, const TrainConfig& base, const SyntheticDomainSpec& spec,
                        const std::vector<unsigned long>& seeds);

// Suites: sm, stage, align, da, alpha, adapt.
std::vector<Variant> suite_variants(const std::string& suite);

struct AblationTable {
  std::vector<AblationRow> rows;
};

AblationTable run_suite(const std::string& suite, const TrainConfig& base, const SyntheticDomainSpec& spec,
                        const std::vector<unsigned long>& seeds);

// Alpha sweep per the mixing-concentration ablation.
AblationTable run_alpha_sweep(const TrainConfig& base, const SyntheticDomainSpec& spec,
                              const std::vector<unsigned long>& seeds,
                              const std::vector<double>& alphas = {0.1, 0.2, 0.5, 1.0});

void write_ablation_csv(const AblationTable& table, const std::filesystem::path& path);

double median_of(std::vector<double> values);

}  // namespace qda
