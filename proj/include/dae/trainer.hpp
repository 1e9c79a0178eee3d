#pragma once

// Training of the gain network through the unrolled filter. The filter
// behaves like a recurrent cell whose state is the attitude; the loss is
// the RMS angle between ground-truth and updated gravity directions and
// its gradient is taken by full backpropagation through every step of a
// segment.

#include "dae/gain_net.hpp"
#include "dae/recording.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace dae::train
{
/// acos arguments are clamped to [-1 + 1e-9, 1 - 1e-9].
inline constexpr double kCosineClamp = 1e-9;

struct TrainingSegment
{
        std::vector<ImuSample<double>> samples;
        std::vector<Mat3> gt;
        Mat3 initial = Mat3::Identity(); // ground truth at the first sample
        std::string source;
        std::size_t offset = 0;
};

struct TrainConfig
{
        std::size_t segment_length = 8000;
        std::size_t batch_size = 5;
        double learning_rate = 3e-4;
        double ic_error_max_deg = 0.1;
        int epochs = 10;
        std::uint64_t seed = 0;
        bool shuffle = true;
        bool ic_perturb = true;
        net::InputMode residual_mode = net::InputMode::signed_powers;
        double validation_fraction = 0.1;
        double gradient_clip = 0; // max batch gradient norm, 0 disables


        void validate() const;
};

struct LossReport
{
        double loss = 0; // radians
        std::vector<double> per_segment;
        double gradient_norm = 0;
        int epoch = -1;

        [[nodiscard]] double loss_deg() const;
};

/// RMS of the angles, the segment loss.
[[nodiscard]] double rms(const std::vector<double>& angles);

/// Gravity angle error of one estimate, acos of the clamped dot product.
[[nodiscard]] double gravity_angle(const Vec3& gt_gravity, const Vec3& estimated_gravity);

[[nodiscard]] TrainingSegment whole_recording(const Recording& recording);

/// Non-overlapping segments of exactly segment_length samples; remainders
/// are dropped and segments never span recordings. Shuffled with the seed
/// when config.shuffle is set.
[[nodiscard]] std::vector<TrainingSegment> segment_dataset(const std::vector<Recording>& recordings,
                                                           const TrainConfig& config);

/// gt * R(roll, pitch, yaw) with each angle uniform in [-max_deg, max_deg].
[[nodiscard]] Mat3 perturb_initial_condition(const Mat3& gt, double max_deg, std::mt19937_64& rng);

struct SegmentLoss
{
        double loss = 0;
        std::vector<double> angles; // one per filter step
        net::GainNetParams gradient;
        bool has_gradient = false;
};

/// Runs the DAE filter over the segment from `initial` and returns the loss
/// and, when requested, its exact gradient with respect to all parameters.
[[nodiscard]] SegmentLoss segment_loss(const net::GainNetParams& params, const TrainingSegment& segment,
                                       const Mat3& initial, bool with_gradient);

/// Same, with the initial condition drawn per the config.
[[nodiscard]] SegmentLoss segment_loss(const net::GainNetParams& params, const TrainingSegment& segment,
                                       const TrainConfig& config, std::mt19937_64& rng);

struct EpochRecord
{
        int epoch = 0;
        double train_loss = 0;
        double validation_loss = std::numeric_limits<double>::quiet_NaN();
        double gradient_norm = 0;
        int aborted_batches = 0;
};

struct TrainResult
{
        net::GainNetParams params; // best validation checkpoint
        net::GainNetParams final_params;
        std::vector<EpochRecord> history;
        int best_epoch = -1;
};

using EpochCallback = std::function<void(const EpochRecord&, const net::GainNetParams&)>;

[[nodiscard]] TrainResult train(const std::vector<Recording>& recordings, const TrainConfig& config,
                                const EpochCallback& on_epoch = {});

/// Same, starting from the given parameters.
[[nodiscard]] TrainResult train(const std::vector<Recording>& recordings, const TrainConfig& config,
                                net::GainNetParams initial, const EpochCallback& on_epoch = {});

/// Full recordings, ground-truth initial condition, no perturbation.
[[nodiscard]] LossReport evaluate(const net::GainNetParams& params, const std::vector<Recording>& recordings);

// One line per epoch after a '#' header: epoch train_loss_rad validation_loss_rad gradient_norm aborted_batches
void write_history(const std::vector<EpochRecord>& history, std::ostream& out);
void write_history_line(const EpochRecord& record, std::ostream& out);
}
