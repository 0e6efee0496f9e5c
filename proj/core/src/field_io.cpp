#include "pf/field_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace pf {
namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string expect_line(std::istream& in, const std::string& where) {
    std::string line;
    if (!std::getline(in, line)) throw FieldIoError("unexpected end of file reading " + where);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string expect_kv(std::istream& in, const std::string& key) {
    std::string line = expect_line(in, key);
    auto eq = line.find('=');
    if (eq == std::string::npos || line.substr(0, eq) != key)
        throw FieldIoError("malformed header: expected '" + key + "=...', got '" + line + "'");
    return line.substr(eq + 1);
}

void byteswap_doubles(std::vector<double>& v) {
    for (double& d : v) {
        auto b = std::bit_cast<std::array<unsigned char, 8>>(d);
        std::reverse(b.begin(), b.end());
        d = std::bit_cast<double>(b);
    }
}

} // namespace

void write_field(const ScalarField2D& u, const std::string& path, const std::string& comment) {
    const Grid2D& g = u.grid;
    if (static_cast<int>(u.v.size()) != g.count())
        throw FieldIoError("write_field: values length does not match nx*ny");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FieldIoError("write_field: cannot open '" + path + "'");
    out << "PF2D 1\n";
    if (!comment.empty()) out << "# " << comment << "\n";
    out << "nx=" << g.nx << "\nny=" << g.ny << "\nhx=" << fmt_double(g.hx) << "\nhy="
        << fmt_double(g.hy) << "\nox=" << fmt_double(g.ox) << "\noy=" << fmt_double(g.oy)
        << "\nbc=" << to_string(g.bc) << "\ndata\n";
    std::vector<double> payload = u.v;
    if constexpr (std::endian::native == std::endian::big) byteswap_doubles(payload);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!out) throw FieldIoError("write_field: write failed for '" + path + "'");
}

ScalarField2D read_field(const std::string& path, std::string* comment) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FieldIoError("read_field: cannot open '" + path + "'");
    std::string magic = expect_line(in, "magic");
    if (magic != "PF2D 1") throw FieldIoError("read_field: bad magic '" + magic + "'");

    std::string line = expect_line(in, "header");
    if (comment) comment->clear();
    if (!line.empty() && line[0] == '#') {
        if (comment) *comment = line.size() > 2 ? line.substr(2) : "";
        line = expect_line(in, "header");
    }
    auto kv_from = [&](const std::string& key, const std::string& got) {
        auto eq = got.find('=');
        if (eq == std::string::npos || got.substr(0, eq) != key)
            throw FieldIoError("malformed header: expected '" + key + "=...', got '" + got + "'");
        return got.substr(eq + 1);
    };

    Grid2D g;
    try {
        g.nx = std::stoi(kv_from("nx", line));
        g.ny = std::stoi(expect_kv(in, "ny"));
        g.hx = std::stod(expect_kv(in, "hx"));
        g.hy = std::stod(expect_kv(in, "hy"));
        g.ox = std::stod(expect_kv(in, "ox"));
        g.oy = std::stod(expect_kv(in, "oy"));
    } catch (const std::invalid_argument&) {
        throw FieldIoError("malformed header: non-numeric value");
    }
    g.bc = boundary_from_string(expect_kv(in, "bc"));
    if (g.nx < 8 || g.ny < 8 || !(g.hx > 0.0) || !(g.hy > 0.0))
        throw FieldIoError("read_field: invalid grid header");
    if (expect_line(in, "data marker") != "data")
        throw FieldIoError("malformed header: missing 'data' line");

    ScalarField2D u(g);
    const std::streamsize bytes = static_cast<std::streamsize>(u.v.size() * sizeof(double));
    in.read(reinterpret_cast<char*>(u.v.data()), bytes);
    if (in.gcount() != bytes)
        throw FieldIoError("read_field: payload shorter than nx*ny values");
    char extra;
    if (in.read(&extra, 1))
        throw FieldIoError("read_field: payload longer than nx*ny values");
    if constexpr (std::endian::native == std::endian::big) byteswap_doubles(u.v);
    return u;
}

} // namespace pf
