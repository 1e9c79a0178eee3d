#pragma once

#include "dae/filter.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dae
{
enum class Placement
{
        pocket,
        texting,
        body,
        bag,
        synthetic,
};

[[nodiscard]] std::string_view to_string(Placement placement);
[[nodiscard]] std::optional<Placement> parse_placement(std::string_view name);

/// Sensor samples with ground-truth attitude (body -> NED) aligned 1:1.
struct Recording
{
        std::string id;
        Placement placement = Placement::synthetic;
        std::vector<ImuSample<double>> samples;
        std::vector<Mat3> gt;
        double rate_hz = 0;
};

/// Throws AlignmentError on length mismatch and ParseError on non-monotone
/// time, non-finite values, implausible specific force or non-orthogonal GT.
void validate_recording(const Recording& recording);

// Canonical CSV: one header line, then
//   t_s,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,q_w,q_x,q_y,q_z
// seconds, rad/s, m/s^2, unit quaternion body -> reference (scalar first).
inline constexpr std::string_view kCsvHeader = "t_s,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,q_w,q_x,q_y,q_z";

[[nodiscard]] Recording parse_recording(std::string_view text, std::string id, Placement placement);
[[nodiscard]] Recording load_recording(const std::filesystem::path& path,
                                       std::optional<Placement> placement = std::nullopt);
[[nodiscard]] std::string format_recording(const Recording& recording);
void save_recording(const Recording& recording, const std::filesystem::path& path);

/// All *.csv files under `dir`, sorted by path. A file's placement is the
/// name of its parent directory when that names a placement, otherwise
/// synthetic. `only`, when given, keeps a single placement.
[[nodiscard]] std::vector<Recording> load_recordings(const std::filesystem::path& dir,
                                                     std::optional<Placement> only = std::nullopt);
}
