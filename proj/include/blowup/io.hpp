#pragma once

// Text and binary serialisation.  Numbers are written in shortest round-trip
// form so every emitted file re-reads bit-exactly.

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/wave_solver.hpp"

namespace blowup::io {

inline std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError("malformed number '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes rows of numbers under a comma-separated header.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns)
{
    auto out = open_out(path);
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << fmt(columns[c][r]);
        out << '\n';
    }
}

/// Two-column whitespace-separated data for plotting tools.
inline void write_dat(const std::filesystem::path& path, const std::vector<double>& x,
                      const std::vector<double>& y, const std::string& comment)
{
    auto out = open_out(path);
    out << "# " << comment << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) out << fmt(x[i]) << ' ' << fmt(y[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Snapshots

enum class SnapshotFormat { csv, binary };

inline const char* kind_name(BallKind k) { return k == BallKind::radial ? "radial" : "line"; }

inline BallKind parse_kind(std::string_view s)
{
    if (s == "line") return BallKind::line;
    if (s == "radial") return BallKind::radial;
    throw ConfigError("unknown grid kind '" + std::string(s) + "'");
}

inline void write_snapshot_csv(std::ostream& out, const Snapshot& snap)
{
    out << "t,dx,N,kind\n"
        << fmt(snap.state.t) << ',' << fmt(snap.grid.dx) << ',' << snap.grid.N << ',' << kind_name(snap.grid.kind) << '\n'
        << "x,u,ut\n";
    for (std::size_t i = 0; i < snap.grid.n; ++i)
        out << fmt(snap.grid.x(i)) << ',' << fmt(snap.state.u[i]) << ',' << fmt(snap.state.ut[i]) << '\n';
}

inline Snapshot read_snapshot_csv(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        if (pos > start) lines.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    if (lines.size() < 3 || lines[0].rfind("t,dx,N,kind", 0) != 0 || lines[2].rfind("x,u,ut", 0) != 0)
        throw ConfigError("snapshot csv: bad header");
    const auto head = split(lines[1]);
    if (head.size() != 4) throw ConfigError("snapshot csv: bad header row");
    Snapshot s;
    s.state.t = parse_double(head[0]);
    s.grid.dx = parse_double(head[1]);
    s.grid.N = int(parse_double(head[2]));
    std::string_view kind = head[3];
    while (!kind.empty() && (kind.back() == '\r' || kind.back() == ' ')) kind.remove_suffix(1);
    s.grid.kind = parse_kind(kind);
    s.grid.n = lines.size() - 3;
    for (std::size_t r = 3; r < lines.size(); ++r) {
        const auto cells = split(lines[r]);
        if (cells.size() != 3) throw ConfigError("snapshot csv: expected 3 columns");
        if (r == 3) s.grid.x_min = parse_double(cells[0]);
        s.state.u.push_back(parse_double(cells[1]));
        s.state.ut.push_back(parse_double(cells[2]));
    }
    return s;
}

inline constexpr char kSnapshotMagic[8] = {'B', 'L', 'S', 'N', 'A', 'P', '0', '1'};

inline void write_snapshot_binary(std::ostream& out, const Snapshot& snap)
{
    auto put = [&](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
    out.write(kSnapshotMagic, sizeof kSnapshotMagic);
    put(snap.state.t);
    put(snap.grid.dx);
    put(snap.grid.x_min);
    put(std::int32_t(snap.grid.N));
    put(std::int32_t(snap.grid.kind == BallKind::radial ? 1 : 0));
    put(std::uint64_t(snap.grid.n));
    for (std::size_t i = 0; i < snap.grid.n; ++i) {
        put(snap.state.u[i]);
        put(snap.state.ut[i]);
    }
}

inline Snapshot read_snapshot_binary(std::string_view bytes)
{
    std::size_t pos = 0;
    auto get = [&](auto& v) {
        if (pos + sizeof v > bytes.size()) throw ConfigError("snapshot binary: truncated");
        std::memcpy(&v, bytes.data() + pos, sizeof v);
        pos += sizeof v;
    };
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSnapshotMagic, 8) != 0)
        throw ConfigError("snapshot binary: bad magic");
    pos = 8;
    Snapshot s;
    std::int32_t N = 0, kind = 0;
    std::uint64_t n = 0;
    get(s.state.t);
    get(s.grid.dx);
    get(s.grid.x_min);
    get(N);
    get(kind);
    get(n);
    s.grid.N = N;
    s.grid.kind = kind ? BallKind::radial : BallKind::line;
    s.grid.n = std::size_t(n);
    s.state.u.resize(s.grid.n);
    s.state.ut.resize(s.grid.n);
    for (std::size_t i = 0; i < s.grid.n; ++i) {
        get(s.state.u[i]);
        get(s.state.ut[i]);
    }
    return s;
}

inline void save_snapshot(const std::filesystem::path& path, const Snapshot& snap, SnapshotFormat fmt_)
{
    auto out = open_out(path, fmt_ == SnapshotFormat::binary);
    if (fmt_ == SnapshotFormat::binary) write_snapshot_binary(out, snap);
    else write_snapshot_csv(out, snap);
}

inline Snapshot load_snapshot(const std::filesystem::path& path)
{
    const std::string data = read_text(path);
    if (data.size() >= 8 && std::memcmp(data.data(), kSnapshotMagic, 8) == 0) return read_snapshot_binary(data);
    return read_snapshot_csv(data);
}

} // namespace blowup::io
