#include "dae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

namespace dae::train
{
namespace
{
constexpr double kDegree = std::numbers::pi / 180;

void require(const bool condition, const char* message)
{
        if (!condition)
        {
                throw Error(ErrorKind::invalid_argument, message);
        }
}

// Columns of the t-frame in reference coordinates; constant because the
// reference gravity and pseudo-magnetic vectors are.
Mat3 reference_triad()
{
        const Vec3 g = gravity_ref<double>();
        const Vec3 m = pseudo_north_ref<double>();
        Mat3 t;
        t.col(0) = g;
        t.col(1) = g.cross(m).normalized();
        t.col(2) = t.col(0).cross(t.col(1)).normalized();
        return t;
}

// Adjoint of y = v / |v|.
Vec3 normalize_adjoint(const Vec3& unit, const double norm, const Vec3& adj_unit)
{
        return (adj_unit - unit * unit.dot(adj_unit)) / norm;
}

// Adjoint of Q = P^{-1/2} mapped to P, via the divided differences of
// f(l) = l^{-1/2} on the eigenvalues of P. The closed form
//   (f(a) - f(b)) / (a - b) = -1 / (sqrt(a) sqrt(b) (sqrt(a) + sqrt(b)))
// also covers repeated eigenvalues, where it equals f'(a).
Mat3 inverse_sqrt_adjoint(const PolarFactors<double>& polar, const Mat3& adj_q)
{
        const Mat3& v = polar.gram_eigenvectors;
        const Vec3 s = polar.gram_eigenvalues.cwiseSqrt();
        const Mat3 sym = 0.5 * (adj_q + adj_q.transpose());
        Mat3 inner = v.transpose() * sym * v;
        for (int i = 0; i < 3; ++i)
        {
                for (int j = 0; j < 3; ++j)
                {
                        inner(i, j) *= -1 / (s(i) * s(j) * (s(i) + s(j)));
                }
        }
        return v * inner * v.transpose();
}

std::vector<TrainingSegment> cut_segments(const std::vector<Recording>& recordings, const std::size_t length)
{
        std::vector<TrainingSegment> segments;
        for (const Recording& r : recordings)
        {
                if (r.samples.size() <= length)
                {
                        throw Error(ErrorKind::recording_too_short,
                                    "recording '" + r.id + "' has " + std::to_string(r.samples.size())
                                            + " samples, segment length is " + std::to_string(length));
                }
                for (std::size_t begin = 0; begin + length <= r.samples.size(); begin += length)
                {
                        TrainingSegment s;
                        s.samples.assign(r.samples.begin() + begin, r.samples.begin() + begin + length);
                        s.gt.assign(r.gt.begin() + begin, r.gt.begin() + begin + length);
                        s.initial = r.gt[begin];
                        s.source = r.id;
                        s.offset = begin;
                        segments.push_back(std::move(s));
                }
        }
        return segments;
}
}

void TrainConfig::validate() const
{
        require(segment_length >= 2, "segment_length must be at least 2");
        require(batch_size >= 1, "batch_size must be at least 1");
        require(learning_rate >= 0 && std::isfinite(learning_rate), "learning_rate must be finite and non-negative");
        require(gradient_clip >= 0, "gradient_clip must be non-negative");
        require(ic_error_max_deg >= 0, "ic_error_max must be non-negative");
        require(epochs >= 0, "epochs must be non-negative");
        require(validation_fraction >= 0 && validation_fraction < 1, "validation_fraction must be in [0, 1)");
}

double LossReport::loss_deg() const
{
        return loss / kDegree;
}

double rms(const std::vector<double>& angles)
{
        if (angles.empty())
        {
                return 0;
        }
        double sum = 0;
        for (const double a : angles)
        {
                sum += a * a;
        }
        return std::sqrt(sum / static_cast<double>(angles.size()));
}

double gravity_angle(const Vec3& gt_gravity, const Vec3& estimated_gravity)
{
        return std::acos(std::clamp(gt_gravity.dot(estimated_gravity), -1 + kCosineClamp, 1 - kCosineClamp));
}

TrainingSegment whole_recording(const Recording& recording)
{
        require(!recording.samples.empty() && recording.samples.size() == recording.gt.size(),
                "recording must be non-empty with aligned ground truth");
        TrainingSegment s;
        s.samples = recording.samples;
        s.gt = recording.gt;
        s.initial = recording.gt.front();
        s.source = recording.id;
        return s;
}

std::vector<TrainingSegment> segment_dataset(const std::vector<Recording>& recordings, const TrainConfig& config)
{
        config.validate();
        std::vector<TrainingSegment> segments = cut_segments(recordings, config.segment_length);
        if (config.shuffle)
        {
                std::mt19937_64 engine(config.seed);
                std::shuffle(segments.begin(), segments.end(), engine);
        }
        return segments;
}

Mat3 perturb_initial_condition(const Mat3& gt, const double max_deg, std::mt19937_64& rng)
{
        require(max_deg >= 0, "max_deg must be non-negative");
        if (max_deg == 0)
        {
                return gt;
        }
        std::uniform_real_distribution<double> uniform(-max_deg * kDegree, max_deg * kDegree);
        EulerAngles<double> e;
        e.roll = uniform(rng);
        e.pitch = uniform(rng);
        e.yaw = uniform(rng);
        return gt * from_euler(e);
}

SegmentLoss segment_loss(const net::GainNetParams& params, const TrainingSegment& segment, const Mat3& initial,
                         const bool with_gradient)
{
        const std::size_t length = segment.samples.size();
        require(length >= 2 && segment.gt.size() == length, "segment needs at least two aligned samples");
        const std::size_t n = length - 1;
        const Vec3 g_ref = gravity_ref<double>();

        std::vector<Mat3> states(length);
        std::vector<StepTrace<double>> traces(n);
        std::vector<double> cosines(n);

        SegmentLoss result;
        result.angles.resize(n);

        const auto gains = [&](const Vec3& residual) { return net::forward(params, residual); };
        FilterState<double> state{initial, segment.samples.front().t};
        states[0] = initial;
        for (std::size_t k = 1; k < length; ++k)
        {
                StepResult<double> s = step(state, segment.samples[k], gains);
                const Vec3 gt_gravity = segment.gt[k].transpose() * g_ref;
                cosines[k - 1] = gt_gravity.dot(s.trace.updated_gravity);
                result.angles[k - 1] = gravity_angle(gt_gravity, s.trace.updated_gravity);
                traces[k - 1] = std::move(s.trace);
                state = s.state;
                states[k] = state.attitude;
        }

        result.loss = rms(result.angles);
        if (!std::isfinite(result.loss))
        {
                throw Error(ErrorKind::non_finite_loss, "segment loss is not finite");
        }
        if (!with_gradient)
        {
                return result;
        }

        result.has_gradient = true;
        result.gradient = net::zero_params(params.input_mode);
        if (result.loss == 0)
        {
                return result;
        }

        std::array<Eigen::VectorXd, 3> residuals;
        std::array<Eigen::VectorXd, 3> slopes;
        std::array<Eigen::VectorXd, 3> gain_adjoints;
        for (int axis = 0; axis < 3; ++axis)
        {
                residuals[axis].resize(static_cast<Eigen::Index>(n));
                for (std::size_t i = 0; i < n; ++i)
                {
                        residuals[axis](static_cast<Eigen::Index>(i)) = traces[i].residual(axis);
                }
                slopes[axis] = net::gain_slopes(params, axis, residuals[axis]);
                gain_adjoints[axis] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        }

        const Mat3 ref_t = reference_triad();
        const double loss_scale = 1 / (static_cast<double>(n) * result.loss);

        // adjoint of the attitude leaving the current step
        Mat3 adj_state = Mat3::Zero();
        for (std::size_t k = n; k >= 1; --k)
        {
                const std::size_t i = k - 1;
                const StepTrace<double>& tr = traces[i];
                const ImuSample<double>& sample = segment.samples[k];
                const double dt = sample.t - segment.samples[k - 1].t;

                // loss term: angle = acos(clamp(gt . g_a))
                Vec3 adj_ga = Vec3::Zero();
                const double c = cosines[i];
                if (c > -1 + kCosineClamp && c < 1 - kCosineClamp)
                {
                        const Vec3 gt_gravity = segment.gt[k].transpose() * g_ref;
                        adj_ga = result.angles[i] * loss_scale * (-1 / std::sqrt(1 - c * c)) * gt_gravity;
                }

                // Triad: updated = ref_t * body_t^T
                Mat3 adj_propagated = Mat3::Zero();
                Vec3 adj_north = Vec3::Zero();
                const Vec3& ga = tr.updated_gravity;
                if (tr.degenerate_triad || tr.gains.diagonal.isZero(0))
                {
                        adj_propagated = adj_state;
                }
                else
                {
                        const Mat3 adj_body_t = adj_state.transpose() * ref_t;
                        const Vec3 north = tr.propagated.transpose() * pseudo_north_ref<double>();

                        const Vec3 cross_y = ga.cross(north);
                        const double cross_y_norm = cross_y.norm();
                        const Vec3 y = cross_y / cross_y_norm;
                        const Vec3 cross_z = ga.cross(y);
                        const double cross_z_norm = cross_z.norm();
                        const Vec3 z = cross_z / cross_z_norm;

                        const Vec3 adj_cross_z = normalize_adjoint(z, cross_z_norm, adj_body_t.col(2));
                        adj_ga += adj_body_t.col(0) + y.cross(adj_cross_z);
                        const Vec3 adj_y = adj_body_t.col(1) + adj_cross_z.cross(ga);
                        const Vec3 adj_cross_y = normalize_adjoint(y, cross_y_norm, adj_y);
                        adj_ga += north.cross(adj_cross_y);
                        adj_north = adj_cross_y.cross(ga);
                }

                // normalization and component-wise blend
                const Vec3 adj_blend = normalize_adjoint(ga, tr.blended_gravity.norm(), adj_ga);
                const Vec3 adj_gains = adj_blend.cwiseProduct(tr.residual);
                Vec3 adj_residual = adj_blend.cwiseProduct(tr.gains.diagonal);
                for (int axis = 0; axis < 3; ++axis)
                {
                        gain_adjoints[axis](static_cast<Eigen::Index>(i)) = adj_gains(axis);
                        adj_residual(axis) += adj_gains(axis) * slopes[axis](static_cast<Eigen::Index>(i));
                }
                // residual = measured - predicted
                const Vec3 adj_predicted = adj_blend - adj_residual;

                // predicted = R_g^T e3, north = R_g^T e1
                adj_propagated.row(2) += adj_predicted.transpose();
                adj_propagated.row(0) += adj_north.transpose();

                // R_g = A (A^T A)^{-1/2}, A = R + R skew(w) dt
                const Mat3& prev = states[i];
                const Mat3 raw = prev + prev * skew(sample.gyro) * dt;
                const PolarFactors<double> polar = polar_factors(raw);
                Mat3 adj_raw = adj_propagated * polar.inverse_sqrt;
                const Mat3 adj_gram = inverse_sqrt_adjoint(polar, raw.transpose() * adj_propagated);
                adj_raw += 2 * raw * adj_gram;

                adj_state = adj_raw * (Mat3::Identity() + skew(sample.gyro) * dt).transpose();
        }

        for (int axis = 0; axis < 3; ++axis)
        {
                net::accumulate_gradients(params, axis, residuals[axis], gain_adjoints[axis], result.gradient);
        }
        if (!result.gradient.all_finite())
        {
                throw Error(ErrorKind::non_finite_loss, "segment gradient is not finite");
        }
        return result;
}

SegmentLoss segment_loss(const net::GainNetParams& params, const TrainingSegment& segment, const TrainConfig& config,
                         std::mt19937_64& rng)
{
        const Mat3 initial =
                config.ic_perturb ? perturb_initial_condition(segment.initial, config.ic_error_max_deg, rng) : segment.initial;
        return segment_loss(params, segment, initial, true);
}

TrainResult train(const std::vector<Recording>& recordings, const TrainConfig& config, const EpochCallback& on_epoch)
{
        return train(recordings, config, net::init_params(config.seed, config.residual_mode), on_epoch);
}

TrainResult train(const std::vector<Recording>& recordings, const TrainConfig& config, net::GainNetParams initial,
                  const EpochCallback& on_epoch)
{
        config.validate();
        require(!recordings.empty(), "no training recordings");
        require(initial.input_mode == config.residual_mode, "initial parameters use a different input mode");

        // every k-th segment of the natural order is held out for validation
        const std::vector<TrainingSegment> segments = cut_segments(recordings, config.segment_length);
        std::vector<std::size_t> train_ids;
        std::vector<std::size_t> validation_ids;
        const std::size_t stride =
                config.validation_fraction > 0 ? static_cast<std::size_t>(std::lround(1 / config.validation_fraction)) : 0;
        for (std::size_t i = 0; i < segments.size(); ++i)
        {
                if (stride > 0 && (i + 1) % stride == 0)
                {
                        validation_ids.push_back(i);
                }
                else
                {
                        train_ids.push_back(i);
                }
        }

        TrainResult result;
        result.params = initial;
        result.final_params = std::move(initial);
        net::GainNetParams& params = result.final_params;
        double best = std::numeric_limits<double>::infinity();

        std::mt19937_64 rng(config.seed);
        for (int epoch = 0; epoch < config.epochs; ++epoch)
        {
                std::vector<std::size_t> order = train_ids;
                if (config.shuffle)
                {
                        std::shuffle(order.begin(), order.end(), rng);
                }

                EpochRecord record;
                record.epoch = epoch;
                double loss_sum = 0;
                double grad_norm_sum = 0;
                std::size_t loss_count = 0;
                std::size_t batches = 0;
                for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size)
                {
                        const std::size_t end = std::min(order.size(), begin + config.batch_size);
                        net::GainNetParams gradient = net::zero_params(params.input_mode);
                        std::vector<double> losses;
                        bool aborted = false;
                        for (std::size_t b = begin; b < end; ++b)
                        {
                                try
                                {
                                        const SegmentLoss s = segment_loss(params, segments[order[b]], config, rng);
                                        net::axpy(1, s.gradient, gradient);
                                        losses.push_back(s.loss);
                                }
                                catch (const Error& e)
                                {
                                        if (e.kind() != ErrorKind::non_finite_loss)
                                        {
                                                throw;
                                        }
                                        aborted = true;
                                        break;
                                }
                        }
                        if (aborted)
                        {
                                ++record.aborted_batches;
                                continue;
                        }
                        const double norm = std::sqrt(net::squared_norm(gradient)) / static_cast<double>(end - begin);
                        double scale = config.learning_rate / static_cast<double>(end - begin);
                        if (config.gradient_clip > 0 && norm > config.gradient_clip)
                        {
                                scale *= config.gradient_clip / norm;
                        }
                        net::axpy(-scale, gradient, params);
                        grad_norm_sum += norm;
                        ++batches;
                        loss_sum = std::accumulate(losses.begin(), losses.end(), loss_sum);
                        loss_count += losses.size();
                }
                record.train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count)
                                                   : std::numeric_limits<double>::quiet_NaN();
                record.gradient_norm = batches > 0 ? grad_norm_sum / static_cast<double>(batches) : 0;

                double selection = record.train_loss;
                if (!validation_ids.empty())
                {
                        double v = 0;
                        for (const std::size_t id : validation_ids)
                        {
                                v += segment_loss(params, segments[id], segments[id].initial, false).loss;
                        }
                        record.validation_loss = v / static_cast<double>(validation_ids.size());
                        selection = record.validation_loss;
                }
                if (selection < best)
                {
                        best = selection;
                        result.params = params;
                        result.best_epoch = epoch;
                }

                result.history.push_back(record);
                if (on_epoch)
                {
                        on_epoch(record, params);
                }
        }
        if (result.best_epoch < 0)
        {
                result.params = params;
        }
        return result;
}

LossReport evaluate(const net::GainNetParams& params, const std::vector<Recording>& recordings)
{
        LossReport report;
        for (const Recording& r : recordings)
        {
                const TrainingSegment whole = whole_recording(r);
                report.per_segment.push_back(segment_loss(params, whole, whole.initial, false).loss);
        }
        if (!report.per_segment.empty())
        {
                report.loss = std::accumulate(report.per_segment.begin(), report.per_segment.end(), 0.0)
                              / static_cast<double>(report.per_segment.size());
        }
        return report;
}

void write_history_line(const EpochRecord& record, std::ostream& out)
{
        char line[160];
        std::snprintf(line, sizeof(line), "%d %.17g %.17g %.17g %d\n", record.epoch, record.train_loss,
                      record.validation_loss, record.gradient_norm, record.aborted_batches);
        out << line;
}

void write_history(const std::vector<EpochRecord>& history, std::ostream& out)
{
        out << "# epoch train_loss_rad validation_loss_rad gradient_norm aborted_batches\n";
        for (const EpochRecord& r : history)
        {
                write_history_line(r, out);
        }
}
}
