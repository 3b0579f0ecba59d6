#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zks/audit/log.hpp"
#include "zks/calibrate/profile.hpp"
#include "zks/encoder/float_model.hpp"
#include "zks/encoder/quantized_model.hpp"
#include "zks/encoder/trainer.hpp"
#include "zks/policy/action.hpp"
#include "zks/policy/tree.hpp"
#include "zks/signal/dataset.hpp"
#include "zks/zkp/circuit.hpp"
#include "zks/zkp/prover.hpp"
#include "zks/zkp/registry.hpp"
#include "zks/zkp/verifier.hpp"

namespace zks::pipeline {

/// Everything a device needs to act on raw windows, and what the registry
/// pins.
struct Artifacts {
    encoder::QuantizedModel model;
    calibrate::CalibrationProfile profile;
    policy::PolicyTree tree;
    signal::Stats stats;
};

/// Two-level tree over the flag-0 "armed" bit, the class and the
/// confidence; class 0 is the empty room.
policy::PolicyTree default_tree(std::size_t n_classes);

/// Fits T on the quantized logits of a standardized calibration split, then
/// selects tau on the same split from the table confidences u_q / 128.
calibrate::CalibrationProfile calibrate_model(const encoder::QuantizedModel& qm,
                                              std::span<const signal::Window> calib, std::string dataset_checksum,
                                              double lambda = calibrate::CalibrationProfile::kDefaultLambda);

struct ReferenceConfig {
    signal::DatasetSpec data;
    std::size_t n_train = 300;
    std::size_t n_calib = 150;
    encoder::ModelConfig model;
    std::uint64_t model_seed = 1;
    encoder::TrainConfig train;
    double lambda = calibrate::CalibrationProfile::kDefaultLambda;

    /// 64 frames, 16 subcarriers, 5 classes, 20 dB, 600 windows.
    static ReferenceConfig standard();
};

/// Splits are raw; the artifacts carry the train-split statistics.
struct TrainedReference {
    Artifacts artifacts;
    encoder::FloatModel float_model;
    std::vector<signal::Window> train;
    std::vector<signal::Window> calib;
    std::vector<signal::Window> test;
};

TrainedReference train_reference(const ReferenceConfig& cfg);

struct DeviceOptions {
    std::string site_id = "site-0";
    std::string zone = "zone-0";  // used when a window carries none
    std::string target = "door-1";
    std::uint32_t flag_mask = 0x1;
    std::uint64_t seed = 1;
};

/// Device-side result for one window, before proving.
struct Observation {
    std::uint64_t t_win = 0;
    int label = 0;
    std::size_t top = 0;
    std::int32_t u_q = 0;
    policy::ActionRecord action;
    zkp::Statement statement;
    zkp::WitnessInput witness;
};

/// Edge device. Its circuit comes from its own artifacts, so a device with
/// altered artifacts proves against an altered circuit.
class Device {
public:
    Device(Artifacts artifacts, DeviceOptions options);

    /// standardize, forward_quantized, table confidence, decide, commit.
    /// Flags, r and the nonce derive from (seed, t_win).
    Observation observe(const signal::Window& raw) const;

    const Artifacts& artifacts() const { return artifacts_; }
    const DeviceOptions& options() const { return options_; }
    const zkp::Circuit& circuit() const { return *circuit_; }
    const encoder::ConfidenceTable& table() const { return table_; }

private:
    Artifacts artifacts_;
    DeviceOptions options_;
    encoder::ConfidenceTable table_;
    std::shared_ptr<const zkp::Circuit> circuit_;
};

struct RunOptions {
    std::size_t batch = 1;
    std::optional<std::uint32_t> openings;
    std::uint64_t seed = 1;
    /// Worker threads for observing, proving and verifying; the audit log
    /// is still appended in window order by one writer.
    std::size_t threads = 1;
    /// Audit timestamp of a window; defaults to t_win seconds in ms.
    std::function<std::int64_t(std::uint64_t t_win)> clock;
};

struct BatchRecord {
    std::vector<zkp::Statement> statements;
    zkp::Proof proof;
    std::size_t bytes = 0;
    double prove_seconds = 0.0;
    double verify_seconds = 0.0;
    zkp::ProveStats stats;
    zkp::VerifyResult verdict;
};

struct RunSummary {
    std::size_t windows = 0;
    std::size_t decided = 0;
    std::size_t abstained = 0;
    std::size_t decided_correct = 0;
    std::size_t accepted_windows = 0;
    std::size_t batches = 0;
    std::size_t accepted_batches = 0;
    double coverage = 0.0;
    double risk = 0.0;  // error rate of the top class among decided windows
    double abstain_rate = 0.0;
    double acceptance_rate = 0.0;  // windows whose batch proof verified
    std::size_t c4_per_window = 0;
    std::size_t c4_instances = 0;
    std::size_t constraint_instances = 0;
    double prove_seconds = 0.0;
    double verify_seconds = 0.0;
    std::size_t proof_bytes = 0;
    zkp::AmortizedCost amortized;

    std::string to_json() const;
};

struct RunResult {
    std::vector<Observation> observations;
    std::vector<BatchRecord> batches;
    RunSummary summary;
};

/// Windows are processed in order and packed into consecutive batches of
/// up to B. Every window gets an audit entry after its batch is verified;
/// rejected proofs are reported in the summary, not thrown.
RunResult run(const Device& device, const zkp::Registry& registry, std::span<const signal::Window> raw,
              const RunOptions& options, audit::AuditLog* log = nullptr);

/// Audit fields of one observation.
audit::AuditFields audit_fields(const Observation& obs, const std::string& site_id, std::int64_t ts,
                                std::size_t pi_size);

/// What the audit log alone determines.
struct LogSummary {
    std::size_t windows = 0;
    std::size_t decided = 0;
    std::size_t abstained = 0;
    double coverage = 0.0;
    double abstain_rate = 0.0;
};

/// Throws FormatError on a line that does not parse.
LogSummary summarize_log(std::span<const std::string> lines);

/// Calls body(i) for i in [0, n) on up to `threads` workers; rethrows the
/// first exception.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace zks::pipeline
