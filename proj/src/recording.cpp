#include "dae/recording.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dae
{
namespace
{
constexpr double kQuaternionNormTolerance = 1e-3;
constexpr double kOrthogonalityTolerance = 1e-9;

[[noreturn]] void parse_error(const std::string& id, const std::size_t line, const std::string& what)
{
        throw Error(ErrorKind::parse_error, id + ":" + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s)
{
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        {
                s.remove_prefix(1);
        }
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        {
                s.remove_suffix(1);
        }
        return s;
}

void append_number(std::string& out, const double value)
{
        std::array<char, 32> buf;
        const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
        (void)ec;
        out.append(buf.data(), end);
}

bool sane_specific_force(const Vec3& acc)
{
        const double n = acc.norm();
        return n > 0.1 && n < 100;
}
}

std::string_view to_string(const Placement placement)
{
        switch (placement)
        {
        case Placement::pocket:
                return "pocket";
        case Placement::texting:
                return "texting";
        case Placement::body:
                return "body";
        case Placement::bag:
                return "bag";
        case Placement::synthetic:
                return "synthetic";
        }
        return "synthetic";
}

std::optional<Placement> parse_placement(const std::string_view name)
{
        for (const Placement p :
             {Placement::pocket, Placement::texting, Placement::body, Placement::bag, Placement::synthetic})
        {
                if (to_string(p) == name)
                {
                        return p;
                }
        }
        return std::nullopt;
}

void validate_recording(const Recording& r)
{
        if (r.samples.size() != r.gt.size())
        {
                throw Error(ErrorKind::alignment_error, r.id + ": " + std::to_string(r.samples.size())
                                                                + " sensor samples vs " + std::to_string(r.gt.size())
                                                                + " ground-truth samples");
        }
        for (std::size_t i = 0; i < r.samples.size(); ++i)
        {
                const ImuSample<double>& s = r.samples[i];
                if (!std::isfinite(s.t) || !s.gyro.allFinite() || !s.acc.allFinite())
                {
                        throw Error(ErrorKind::parse_error, r.id + ": sample " + std::to_string(i) + " is not finite");
                }
                if (i > 0 && !(s.t > r.samples[i - 1].t))
                {
                        throw Error(ErrorKind::parse_error,
                                    r.id + ": non-monotone timestamp at sample " + std::to_string(i));
                }
                if (!sane_specific_force(s.acc))
                {
                        throw Error(ErrorKind::parse_error,
                                    r.id + ": implausible specific force at sample " + std::to_string(i));
                }
                const Mat3& g = r.gt[i];
                if ((g.transpose() * g - Mat3::Identity()).cwiseAbs().maxCoeff() > kOrthogonalityTolerance
                    || std::abs(g.determinant() - 1) > kOrthogonalityTolerance)
                {
                        throw Error(ErrorKind::parse_error,
                                    r.id + ": ground truth at sample " + std::to_string(i) + " is not a rotation");
                }
        }
}

Recording parse_recording(const std::string_view text, std::string id, const Placement placement)
{
        Recording r;
        r.id = std::move(id);
        r.placement = placement;

        std::size_t line_no = 0;
        std::size_t pos = 0;
        bool header_seen = false;
        while (pos < text.size())
        {
                std::size_t eol = text.find('\n', pos);
                if (eol == std::string_view::npos)
                {
                        eol = text.size();
                }
                const std::string_view line = trim(text.substr(pos, eol - pos));
                pos = eol + 1;
                ++line_no;
                if (line.empty())
                {
                        continue;
                }
                if (!header_seen)
                {
                        header_seen = true;
                        continue;
                }

                std::array<double, 11> v{};
                std::size_t field = 0;
                std::size_t start = 0;
                while (true)
                {
                        const std::size_t comma = line.find(',', start);
                        const std::string_view token =
                                trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
                        if (field >= v.size())
                        {
                                parse_error(r.id, line_no, "expected 11 fields");
                        }
                        const char* first = token.data();
                        const char* last = token.data() + token.size();
                        if (!token.empty() && *first == '+')
                        {
                                ++first;
                        }
                        const auto [ptr, ec] = std::from_chars(first, last, v[field]);
                        if (ec != std::errc() || ptr != last || token.empty())
                        {
                                parse_error(r.id, line_no, "bad number in field " + std::to_string(field + 1));
                        }
                        ++field;
                        if (comma == std::string_view::npos)
                        {
                                break;
                        }
                        start = comma + 1;
                }
                if (field != v.size())
                {
                        parse_error(r.id, line_no, "expected 11 fields, got " + std::to_string(field));
                }
                for (const double x : v)
                {
                        if (!std::isfinite(x))
                        {
                                parse_error(r.id, line_no, "non-finite value");
                        }
                }

                ImuSample<double> s;
                s.t = v[0];
                s.gyro = Vec3(v[1], v[2], v[3]);
                s.acc = Vec3(v[4], v[5], v[6]);
                if (!r.samples.empty() && !(s.t > r.samples.back().t))
                {
                        parse_error(r.id, line_no, "non-monotone timestamp");
                }
                if (!sane_specific_force(s.acc))
                {
                        parse_error(r.id, line_no, "specific force norm outside (0.1, 100) m/s^2");
                }

                Eigen::Quaterniond q(v[7], v[8], v[9], v[10]);
                if (std::abs(q.norm() - 1) > kQuaternionNormTolerance)
                {
                        parse_error(r.id, line_no, "ground-truth quaternion is not unit");
                }
                r.samples.push_back(s);
                r.gt.push_back(q.normalized().toRotationMatrix());
        }

        if (r.samples.size() >= 2)
        {
                r.rate_hz = static_cast<double>(r.samples.size() - 1) / (r.samples.back().t - r.samples.front().t);
        }
        validate_recording(r);
        return r;
}

Recording load_recording(const std::filesystem::path& path, const std::optional<Placement> placement)
{
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
                throw Error(ErrorKind::parse_error, "cannot open " + path.string());
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();

        Placement p = Placement::synthetic;
        if (placement)
        {
                p = *placement;
        }
        else if (const auto parent = parse_placement(path.parent_path().filename().string()))
        {
                p = *parent;
        }
        return parse_recording(buffer.str(), path.stem().string(), p);
}

std::string format_recording(const Recording& r)
{
        validate_recording(r);
        std::string out(kCsvHeader);
        out += '\n';
        for (std::size_t i = 0; i < r.samples.size(); ++i)
        {
                const ImuSample<double>& s = r.samples[i];
                Eigen::Quaterniond q(r.gt[i]);
                if (q.w() < 0)
                {
                        q.coeffs() = -q.coeffs();
                }
                const std::array<double, 11> v{s.t,      s.gyro.x(), s.gyro.y(), s.gyro.z(), s.acc.x(), s.acc.y(),
                                               s.acc.z(), q.w(),      q.x(),      q.y(),      q.z()};
                for (std::size_t j = 0; j < v.size(); ++j)
                {
                        if (j > 0)
                        {
                                out += ',';
                        }
                        append_number(out, v[j]);
                }
                out += '\n';
        }
        return out;
}

void save_recording(const Recording& recording, const std::filesystem::path& path)
{
        if (path.has_parent_path())
        {
                std::filesystem::create_directories(path.parent_path());
        }
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
        {
                throw Error(ErrorKind::parse_error, "cannot open " + path.string() + " for writing");
        }
        out << format_recording(recording);
}

std::vector<Recording> load_recordings(const std::filesystem::path& dir, const std::optional<Placement> only)
{
        if (!std::filesystem::is_directory(dir))
        {
                throw Error(ErrorKind::parse_error, dir.string() + " is not a directory");
        }
        std::vector<std::filesystem::path> paths;
        for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
        {
                if (entry.is_regular_file() && entry.path().extension() == ".csv")
                {
                        paths.push_back(entry.path());
                }
        }
        std::sort(paths.begin(), paths.end());

        std::vector<Recording> recordings;
        for (const auto& p : paths)
        {
                Recording r = load_recording(p);
                if (!only || r.placement == *only)
                {
                        recordings.push_back(std::move(r));
                }
        }
        return recordings;
}
}
