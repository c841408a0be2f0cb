#include "ivselect/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "ivselect/errors.hpp"

namespace ivselect::io {
namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    return out;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::string unquote(std::string s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

bool is_missing(const std::string& cell) {
    static const char* tokens[] = {"", "NA", "na", "NaN", "nan", "N/A", "null", "NULL", "."};
    return std::find(std::begin(tokens), std::end(tokens), cell) != std::end(tokens);
}

}  // namespace

Dataset parse_csv(const std::string& text, const CsvColumns& columns, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        for (auto& h : split(line)) header.push_back(unquote(trim(h)));
        break;
    }
    if (header.empty()) throw InputError(source + ": missing header row");
    std::map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c].empty()) throw InputError(source + ": empty column name at position " + std::to_string(c + 1));
        if (!index.emplace(header[c], c).second) throw InputError(source + ": duplicate column '" + header[c] + "'");
    }
    auto find = [&](const std::string& name) {
        const auto it = index.find(name);
        if (it == index.end()) throw InputError(source + ": missing column '" + name + "'");
        return it->second;
    };
    const std::size_t yc = find(columns.outcome);
    const std::size_t dc = find(columns.treatment);
    if (yc == dc) throw InputError(source + ": outcome and treatment are the same column");
    std::vector<std::size_t> qc;
    if (columns.candidates.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c != yc && c != dc) qc.push_back(c);
        }
    } else {
        for (const auto& name : columns.candidates) {
            const std::size_t c = find(name);
            if (c == yc || c == dc) throw InputError(source + ": column '" + name + "' cannot be a candidate");
            if (std::find(qc.begin(), qc.end(), c) != qc.end()) {
                throw InputError(source + ": candidate '" + name + "' listed twice");
            }
            qc.push_back(c);
        }
    }
    if (qc.empty()) throw InputError(source + ": no candidate columns");

    std::vector<std::size_t> used{yc, dc};
    used.insert(used.end(), qc.begin(), qc.end());
    std::vector<std::vector<double>> values(header.size());
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw InputError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " fields, header has " + std::to_string(header.size()));
        }
        for (std::size_t c : used) {
            const std::string cell = trim(cells[c]);
            const std::string where = source + ": line " + std::to_string(line_no) + ", column '" + header[c] + "'";
            if (is_missing(cell)) throw InputError(where + ": missing value");
            double v = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (*first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last) throw InputError(where + ": '" + cell + "' is not a number");
            if (!std::isfinite(v)) throw InputError(where + ": non-finite value");
            if (c == dc && v != 0.0 && v != 1.0) {
                throw InputError(where + ": treatment must be 0 or 1, found '" + cell + "'");
            }
            values[c].push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw InputError(source + ": no data rows");

    Dataset data;
    const auto n = static_cast<Eigen::Index>(rows);
    data.y = Eigen::Map<const Eigen::VectorXd>(values[yc].data(), n);
    data.d = Eigen::Map<const Eigen::VectorXd>(values[dc].data(), n);
    data.q.resize(n, static_cast<Eigen::Index>(qc.size()));
    for (std::size_t k = 0; k < qc.size(); ++k) {
        data.q.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(values[qc[k]].data(), n);
        data.names.push_back(header[qc[k]]);
    }
    data.outcome_name = header[yc];
    data.treatment_name = header[dc];
    data.validate();
    return data;
}

Dataset read_csv(const std::filesystem::path& path, const CsvColumns& columns) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), columns, path.string());
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
    data.validate();
    std::string out = data.outcome_name + "," + data.treatment_name;
    for (const auto& name : data.candidate_names()) out += "," + name;
    out += "\n";
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
        out += format_double(data.y[i]) + "," + format_double(data.d[i]);
        for (Eigen::Index j = 0; j < data.q.cols(); ++j) out += "," + format_double(data.q(i, j));
        out += "\n";
    }
    write_atomic(path, out);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw InputError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw InputError("cannot rename onto '" + path.string() + "': " + ec.message());
    }
}

}  // namespace ivselect::io
