#include "rainstorm/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rainstorm {

namespace {

[[noreturn]] void format_error(const std::filesystem::path& path, int line_no,
                               const std::string& line, const std::string& why) {
    std::ostringstream os;
    os << path.string() << ": format error at header line " << line_no << " ('" << line
       << "'): " << why;
    throw std::runtime_error(os.str());
}

struct Header {
    std::string magic;
    GridGeometry geom;
    int nt = 0;
    int header_lines = 0;  // lines consumed including END
};

Header parse_header(std::istream& in, const std::filesystem::path& path) {
    Header h;
    std::string line;
    int line_no = 1;
    if (!std::getline(in, line)) format_error(path, 1, "", "empty file");
    if (line == "PGRD1" || line == "PGRT1") {
        h.magic = line;
    } else {
        format_error(path, 1, line, "expected magic PGRD1 or PGRT1");
    }

    std::map<std::string, std::string> kv;
    bool saw_end = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line == "END") {
            saw_end = true;
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) format_error(path, line_no, line, "expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (!saw_end) format_error(path, line_no, line, "missing END line");
    h.header_lines = line_no;

    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) format_error(path, line_no, "END", std::string("missing key ") + key);
        return it->second;
    };
    auto to_int = [&](const char* key) {
        const std::string& s = need(key);
        try {
            size_t pos = 0;
            const int v = std::stoi(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            format_error(path, line_no, std::string(key) + "=" + s, "not an integer");
        }
    };
    auto to_double = [&](const char* key) {
        const std::string& s = need(key);
        try {
            size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            format_error(path, line_no, std::string(key) + "=" + s, "not a number");
        }
    };

    h.geom.nx = to_int("nx");
    h.geom.ny = to_int("ny");
    h.nt = to_int("nt");
    h.geom.dx_km = to_double("dx_km");
    h.geom.dy_km = to_double("dy_km");
    h.geom.dt_hours = to_double("dt_hours");
    h.geom.lat0 = to_double("lat0");
    h.geom.lon0 = to_double("lon0");
    if (need("units") != "mm_per_step")
        format_error(path, line_no, "units=" + need("units"), "units must be mm_per_step");
    if (h.nt < 0) format_error(path, line_no, "nt=" + need("nt"), "nt must be >= 0");
    try {
        h.geom.validate();
    } catch (const std::exception& e) {
        format_error(path, line_no, "END", e.what());
    }
    return h;
}

void write_header(std::ostream& out, const GridField& f, bool binary) {
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << (binary ? "PGRD1" : "PGRT1") << '\n';
    out << "nx=" << f.geom.nx << '\n';
    out << "ny=" << f.geom.ny << '\n';
    out << "nt=" << f.nt() << '\n';
    out << "dx_km=" << fmt(f.geom.dx_km) << '\n';
    out << "dy_km=" << fmt(f.geom.dy_km) << '\n';
    out << "dt_hours=" << fmt(f.geom.dt_hours) << '\n';
    out << "lat0=" << fmt(f.geom.lat0) << '\n';
    out << "lon0=" << fmt(f.geom.lon0) << '\n';
    out << "units=mm_per_step" << '\n';
    out << "END" << '\n';
}

static_assert(std::endian::native == std::endian::little,
              "PGRID binary I/O assumes a little-endian host");

}  // namespace

void GridGeometry::validate() const {
    if (nx < 1 || ny < 1) throw std::runtime_error("grid geometry: nx and ny must be >= 1");
    if (!(dx_km > 0) || !(dy_km > 0)) throw std::runtime_error("grid geometry: spacing must be > 0");
    if (!(dt_hours > 0)) throw std::runtime_error("grid geometry: dt_hours must be > 0");
}

GridField GridField::zeros(const GridGeometry& geom, int nt) {
    geom.validate();
    GridField f;
    f.geom = geom;
    f.steps.assign(nt, Eigen::ArrayXXf::Zero(geom.ny, geom.nx));
    f.mask = MaskArray::Constant(geom.ny, geom.nx, true);
    return f;
}

GridField GridField::zeros_like(const GridField& other) {
    GridField f = zeros(other.geom, other.nt());
    f.mask = other.mask;
    return f;
}

double GridField::total_mm() const {
    double total = 0.0;
    for (const auto& s : steps)
        total += mask.select(s.cast<double>(), 0.0).sum();
    return total;
}

void GridField::validate() const {
    geom.validate();
    if (mask.rows() != geom.ny || mask.cols() != geom.nx)
        throw std::runtime_error("grid field: mask shape mismatch");
    for (const auto& s : steps) {
        if (s.rows() != geom.ny || s.cols() != geom.nx)
            throw std::runtime_error("grid field: slice shape mismatch");
        if ((mask && (s < 0.0f || !s.isFinite())).any())
            throw std::runtime_error("grid field: negative or non-finite value inside mask");
    }
}

GridField load_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const Header h = parse_header(in, path);

    const int64_t count = int64_t(h.nt) * h.geom.ny * h.geom.nx;
    std::vector<float> raw(static_cast<size_t>(count));
    if (h.magic == "PGRD1") {
        in.read(reinterpret_cast<char*>(raw.data()), count * sizeof(float));
        if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
            throw std::runtime_error(path.string() + ": truncation error, expected " +
                                     std::to_string(count) + " float32 values");
        char extra;
        if (in.read(&extra, 1))
            throw std::runtime_error(path.string() + ": value count mismatch, trailing data after " +
                                     std::to_string(count) + " values");
    } else {
        // istream float extraction rejects "nan"; parse tokens via strtof.
        std::string tok;
        for (int64_t i = 0; i < count; ++i) {
            if (!(in >> tok))
                throw std::runtime_error(path.string() + ": truncation error, expected " +
                                         std::to_string(count) + " values, got " + std::to_string(i));
            char* end = nullptr;
            raw[static_cast<size_t>(i)] = std::strtof(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size())
                throw std::runtime_error(path.string() + ": bad value token '" + tok + "'");
        }
        std::string tail;
        if (in >> tail)
            throw std::runtime_error(path.string() + ": value count mismatch, trailing token '" +
                                     tail + "'");
    }

    GridField f;
    f.geom = h.geom;
    f.mask = MaskArray::Constant(h.geom.ny, h.geom.nx, true);
    f.steps.assign(h.nt, Eigen::ArrayXXf::Zero(h.geom.ny, h.geom.nx));

    // NaN marks out-of-domain cells; the pattern must agree across timesteps.
    int64_t i = 0;
    for (int t = 0; t < h.nt; ++t) {
        for (int y = 0; y < h.geom.ny; ++y) {
            for (int x = 0; x < h.geom.nx; ++x, ++i) {
                const float v = raw[static_cast<size_t>(i)];
                if (std::isnan(v)) {
                    if (t == 0) {
                        f.mask(y, x) = false;
                    } else if (f.mask(y, x)) {
                        throw std::runtime_error(path.string() +
                                                 ": NaN pattern differs between timesteps");
                    }
                } else {
                    if (t > 0 && !f.mask(y, x))
                        throw std::runtime_error(path.string() +
                                                 ": NaN pattern differs between timesteps");
                    if (!std::isfinite(v))
                        throw std::runtime_error(path.string() + ": non-finite value at t=" +
                                                 std::to_string(t));
                    if (v < 0.0f)
                        throw std::runtime_error(path.string() + ": negative value at t=" +
                                                 std::to_string(t));
                    f.steps[t](y, x) = v;
                }
            }
        }
    }
    return f;
}

void save_field(const GridField& field, const std::filesystem::path& path, bool binary) {
    field.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_header(out, field, binary);

    const float nanf = std::numeric_limits<float>::quiet_NaN();
    if (binary) {
        std::vector<float> row(static_cast<size_t>(field.geom.nx));
        for (const auto& s : field.steps) {
            for (int y = 0; y < field.geom.ny; ++y) {
                for (int x = 0; x < field.geom.nx; ++x)
                    row[static_cast<size_t>(x)] = field.mask(y, x) ? s(y, x) : nanf;
                out.write(reinterpret_cast<const char*>(row.data()),
                          static_cast<std::streamsize>(row.size() * sizeof(float)));
            }
        }
    } else {
        char buf[32];
        for (const auto& s : field.steps) {
            for (int y = 0; y < field.geom.ny; ++y) {
                for (int x = 0; x < field.geom.nx; ++x) {
                    if (field.mask(y, x))
                        std::snprintf(buf, sizeof buf, "%.9g", double(s(y, x)));
                    else
                        std::snprintf(buf, sizeof buf, "nan");
                    out << buf << (x + 1 == field.geom.nx ? '\n' : ' ');
                }
            }
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

GridField apply_cutoff(const GridField& field, double cutoff_mm_per_hour) {
    if (cutoff_mm_per_hour < 0)
        throw std::invalid_argument("apply_cutoff: cutoff must be >= 0");
    GridField out = field;
    // the contract is on intensity, value/dt_hours; compare in double
    for (auto& s : out.steps)
        s = (s.cast<double>() / field.geom.dt_hours < cutoff_mm_per_hour).select(0.0f, s);
    return out;
}

IntensityCurve intensity_curve(const GridField& field) {
    if (field.nt() == 0) throw std::runtime_error("intensity_curve: empty field");
    std::vector<float> vals;
    for (const auto& s : field.steps)
        for (int y = 0; y < field.geom.ny; ++y)
            for (int x = 0; x < field.geom.nx; ++x)
                if (field.mask(y, x) && s(y, x) > 0.0f) vals.push_back(s(y, x));
    if (vals.empty())
        throw std::runtime_error("intensity_curve: field has zero total precipitation");
    std::sort(vals.begin(), vals.end());

    double total = 0.0;
    for (float v : vals) total += v;

    IntensityCurve curve;
    double cum = 0.0;
    for (size_t i = 0; i < vals.size();) {
        size_t j = i;
        while (j < vals.size() && vals[j] == vals[i]) {
            cum += vals[j];
            ++j;
        }
        curve.thresholds.push_back(double(vals[i]) / field.geom.dt_hours);
        curve.cumulative_fraction.push_back(cum / total);
        i = j;
    }
    curve.cumulative_fraction.back() = 1.0;  // cum == total here; pin against roundoff
    return curve;
}

double cutoff_for_excluded_fraction(const IntensityCurve& curve, double excluded_fraction) {
    double best = 0.0;
    for (size_t i = 0; i < curve.thresholds.size(); ++i) {
        if (curve.cumulative_fraction[i] <= excluded_fraction) best = curve.thresholds[i];
    }
    return best;
}

}  // namespace rainstorm
