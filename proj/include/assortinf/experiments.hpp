#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "assortinf/dataset.hpp"
#include "assortinf/errors.hpp"
#include "assortinf/hypotheses.hpp"
#include "assortinf/inference.hpp"
#include "assortinf/stats.hpp"

namespace assortinf {

/// Too many replications failed for the run to be trusted.
class ExperimentError : public Error {
public:
    using Error::Error;
};

/// A property set described by name and parameters.
struct HypothesisSpec {
    std::string example;  ///< "example1" .. "example6", or "k0" for an explicit list
    int i = 0;
    std::vector<int> A;
    int q = 50;  ///< percent, example4
    Partition partition;
    int n0 = 1;
    std::vector<int> k0;

    std::string id() const { return example; }
};

/// Throws ValidationError for unknown examples or bad parameters.
PropertySet build_property_set(const HypothesisSpec& spec, int n);

/// "6-8,14-15;1-5,9-13" -> {{6,7,8,14,15},{1,...,5,9,...,13}}. Blocks are
/// separated by ';', ranges by ','. An empty block is written as "".
Partition parse_partition(const std::string& text);
/// "2,4,6-8" -> {2,4,6,7,8}
std::vector<int> parse_index_list(const std::string& text);

struct ExperimentConfig {
    ScenarioSpec scenario;
    double lambda_c = 1.0;
    double alpha = 0.05;
    int B = 200;
    int reps = 300;
    std::vector<int> L_grid;
    std::vector<int> K_star_grid;
    std::optional<HypothesisSpec> hypothesis;
    std::string output_path;
    std::uint64_t master_seed = 0;
    int jobs = 1;
    /// Largest excluded fraction tolerated before the run fails.
    double max_excluded_fraction = 0.05;

    /// Throws ValidationError.
    void validate() const;
};

/// Field names mirror ExperimentConfig; missing fields keep their defaults.
/// `scenario.p` may be null or absent for n log n / 2^n.
ExperimentConfig experiment_config_from_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_to_json(const ExperimentConfig& config);

/// Streams of replication `rep`, all split from Rng(split_seed(master, rep)).
struct ReplicationStreams {
    Rng scenario;
    Rng sets;
    Rng choices;
    Rng bootstrap;
};
ReplicationStreams replication_streams(std::uint64_t master_seed, std::uint64_t rep);

/// One simulated instance: truth plus observed data.
struct SimulatedInstance {
    Scenario truth;
    ObservedDataset data;
};

/// Draws the scenario, the offer sets and the choices for one replication.
SimulatedInstance simulate_instance(const ScenarioSpec& spec, ReplicationStreams& streams);

struct QqRow {
    int rep = 0;
    double std_theta_d_1 = 0.0;
    double std_delta_1 = 0.0;
    std::string error;  ///< empty for successful replications
};

struct QqResult {
    std::vector<QqRow> rows;
    KsResult ks_theta_d_1;
    KsResult ks_delta_1;
    int excluded = 0;
};

struct CoverageRow {
    int k_star = 0;
    int L = 0;
    double coverage = 0.0;
    int reps = 0;
    double mean_width = 0.0;
    int excluded = 0;
};

struct PowerRow {
    std::string example_id;
    int d = 0;
    int L = 0;
    double reject_rate = 0.0;
    int reps = 0;
    int excluded = 0;
    int k_star = 0;  ///< not written to the CSV
};

/// Uses scenario.L and scenario.k_star_target.
QqResult run_qq(const ExperimentConfig& config);
/// One row per (K*, L) in K_star_grid x L_grid order.
std::vector<CoverageRow> run_coverage(const ExperimentConfig& config);
/// K_star_grid lists the true K* values; d = d(K*, K0) must be distinct.
std::vector<PowerRow> run_power(const ExperimentConfig& config);

void write_qq_csv(const QqResult& result, std::ostream& out);
void write_coverage_csv(const std::vector<CoverageRow>& rows, std::ostream& out);
void write_power_csv(const std::vector<PowerRow>& rows, std::ostream& out);

/// %.17g
std::string format_double(double x);

}  // namespace assortinf
