#ifndef SPARSECOMP_MATRIX_IO_HPP
#define SPARSECOMP_MATRIX_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "matcore.hpp"

namespace sparsecomp::io {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_real(std::string_view tok, std::size_t line) {
    tok = trim(tok);
    if (tok.size() > 1 && tok.front() == '+') tok.remove_prefix(1);
    double v = 0;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError("cannot parse '" + std::string(tok) + "' as a real number", line);
    }
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + std::string(tok) + "'", line);
    return v;
}

inline long long parse_int(std::string_view tok, std::size_t line) {
    long long v = 0;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError("cannot parse '" + std::string(tok) + "' as an integer", line);
    }
    return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

inline std::string format_real(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Headerless CSV: one matrix row per line, comma separated. Blank lines
/// and lines starting with '#' are skipped; all rows must have the same
/// length.
inline DenseMatrix read_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const auto comma = body.find(',', start);
            row.push_back(detail::parse_real(body.substr(start, comma - start), lineNo));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError("row has " + std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(rows.front().size()),
                             lineNo);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty matrix file");
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    return DenseMatrix(std::move(m));
}

inline void write_csv(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) out << '#' << c << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << detail::format_real(m(i, j));
        }
        out << '\n';
    }
}

/// MatrixMarket `coordinate real general` (integer and pattern fields are
/// accepted on read; pattern entries read as 1). Duplicate coordinates are
/// summed, as the format prescribes.
inline DenseMatrix read_matrix_market(std::istream& in) {
    std::string line;
    std::size_t lineNo = 0;
    if (!std::getline(in, line)) throw ParseError("empty MatrixMarket file");
    ++lineNo;
    auto header = detail::split_ws(line);
    if (header.size() != 5 || header[0] != "%%MatrixMarket" || header[1] != "matrix") {
        throw ParseError("missing %%MatrixMarket matrix banner", lineNo);
    }
    if (header[2] != "coordinate") throw ParseError("only coordinate format is supported", lineNo);
    const std::string_view field = header[3];
    const bool pattern = field == "pattern";
    if (field != "real" && field != "integer" && !pattern) {
        throw ParseError("unsupported field '" + std::string(field) + "'", lineNo);
    }
    if (header[4] != "general") throw ParseError("only general symmetry is supported", lineNo);

    long long nrows = -1, ncols = -1, nnz = -1;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '%') continue;
        const auto tok = detail::split_ws(body);
        if (tok.size() != 3) throw ParseError("size line must hold rows cols nnz", lineNo);
        nrows = detail::parse_int(tok[0], lineNo);
        ncols = detail::parse_int(tok[1], lineNo);
        nnz = detail::parse_int(tok[2], lineNo);
        break;
    }
    if (nrows < 1 || ncols < 1 || nnz < 0) throw ParseError("invalid or missing size line", lineNo);

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nrows, ncols);
    long long seen = 0;
    while (seen < nnz && std::getline(in, line)) {
        ++lineNo;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '%') continue;
        const auto tok = detail::split_ws(body);
        if (tok.size() != (pattern ? 2u : 3u)) throw ParseError("malformed entry line", lineNo);
        const long long i = detail::parse_int(tok[0], lineNo);
        const long long j = detail::parse_int(tok[1], lineNo);
        if (i < 1 || i > nrows || j < 1 || j > ncols) throw ParseError("index out of range", lineNo);
        m(i - 1, j - 1) += pattern ? 1.0 : detail::parse_real(tok[2], lineNo);
        ++seen;
    }
    if (seen != nnz) {
        throw ParseError("expected " + std::to_string(nnz) + " entries, found " + std::to_string(seen),
                         lineNo);
    }
    return DenseMatrix(std::move(m));
}

/// Writes the nonzero entries in column-major order with shortest
/// round-trip formatting. `comments` lines are emitted after the banner,
/// each prefixed with '%'.
inline void write_matrix_market(std::ostream& out, const Eigen::MatrixXd& m,
                                const std::vector<std::string>& comments = {}) {
    long long nnz = 0;
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != 0.0) ++nnz;
    out << "%%MatrixMarket matrix coordinate real general\n";
    for (const auto& c : comments) out << '%' << c << '\n';
    out << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != 0.0) out << (i + 1) << ' ' << (j + 1) << ' ' << detail::format_real(m(i, j)) << '\n';
}

inline bool has_extension(const std::string& path, std::string_view ext) {
    return path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
}

/// Reads `.mtx` as MatrixMarket, anything else as CSV.
inline DenseMatrix load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return has_extension(path, ".mtx") ? read_matrix_market(in) : read_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void save_matrix(const std::string& path, const Eigen::MatrixXd& m,
                        const std::vector<std::string>& comments = {}) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    if (has_extension(path, ".mtx")) {
        write_matrix_market(out, m, comments);
    } else {
        write_csv(out, m, comments);
    }
}

}  // namespace sparsecomp::io

#endif  // SPARSECOMP_MATRIX_IO_HPP
