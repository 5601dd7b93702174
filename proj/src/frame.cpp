#include "edmpc/frame.hpp"

#include "edmpc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace edmpc {

std::size_t Frame::row_of(long time) const {
    if (time < start_time_ || time > end_time()) {
        throw DataError("time " + std::to_string(time) + " outside frame [" + std::to_string(start_time_) + ", " +
                        std::to_string(end_time()) + "]");
    }
    return static_cast<std::size_t>(time - start_time_);
}

bool Frame::has_column(std::string_view name) const noexcept {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t Frame::index_of(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        throw DataError("unknown column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - names_.begin());
}

const std::vector<double>& Frame::column(std::string_view name) const { return columns_[index_of(name)]; }

void Frame::add_column(std::string name, std::vector<double> values) {
    if (name.empty() || name == "time") {
        throw DataError("invalid column name '" + name + "'");
    }
    if (has_column(name)) {
        throw DataError("duplicate column '" + name + "'");
    }
    if (columns_.empty()) {
        rows_ = values.size();
    } else if (values.size() != rows_) {
        throw DataError("column '" + name + "' has " + std::to_string(values.size()) + " rows, expected " +
                        std::to_string(rows_));
    }
    names_.push_back(std::move(name));
    columns_.push_back(std::move(values));
}

void Frame::append_row(std::span<const double> values) {
    if (values.size() != columns_.size()) {
        throw DataError("row has " + std::to_string(values.size()) + " values, frame has " +
                        std::to_string(columns_.size()) + " columns");
    }
    for (std::size_t c = 0; c < values.size(); ++c) {
        columns_[c].push_back(values[c]);
    }
    ++rows_;
}

void Frame::set_value(std::string_view name, std::size_t row, double value) {
    if (row >= rows_) {
        throw DataError("row " + std::to_string(row) + " outside frame");
    }
    columns_[index_of(name)][row] = value;
}

Frame Frame::slice(long first, long last) const {
    const long lo = std::max(first, start_time_);
    const long hi = std::min(last, end_time());
    Frame out(lo);
    for (std::size_t c = 0; c < names_.size(); ++c) {
        std::vector<double> values;
        if (hi >= lo) {
            auto begin = columns_[c].begin() + (lo - start_time_);
            values.assign(begin, begin + (hi - lo + 1));
        }
        out.add_column(names_[c], std::move(values));
    }
    return out;
}

std::string format_real(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

double parse_real(std::string_view field) {
    if (field.empty() || field == "nan" || field == "NaN" || field == "NA" || field == "-nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    if (field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw DataError("invalid numeric field '" + std::string(field) + "'");
    }
    return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        auto field = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
            field.remove_suffix(1);
        fields.emplace_back(field);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return fields;
}

Frame read_frame_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty CSV input");
    }
    auto header = split_csv_line(line);
    if (header.empty() || header.front() != "time") {
        throw DataError("CSV header must start with 'time'");
    }
    const std::size_t ncols = header.size() - 1;
    std::vector<std::vector<double>> cols(ncols);
    long first_time = 0;
    long expected = 0;
    bool first = true;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));
        }
        const double t = parse_real(fields[0]);
        if (!std::isfinite(t) || t != std::floor(t)) {
            throw DataError("CSV line " + std::to_string(lineno) + ": time must be an integer");
        }
        const long tick = static_cast<long>(t);
        if (first) {
            first_time = tick;
            expected = tick;
            first = false;
        }
        if (tick != expected) {
            throw DataError("CSV line " + std::to_string(lineno) + ": time index must increase by exactly 1");
        }
        ++expected;
        for (std::size_t c = 0; c < ncols; ++c) {
            cols[c].push_back(parse_real(fields[c + 1]));
        }
    }
    Frame frame(first_time);
    for (std::size_t c = 0; c < ncols; ++c) {
        frame.add_column(header[c + 1], std::move(cols[c]));
    }
    if (frame.empty()) {
        throw DataError("CSV contains no records");
    }
    return frame;
}

Frame read_frame_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return read_frame_csv(in);
}

void write_frame_csv(std::ostream& out, const Frame& frame) {
    out << "time";
    for (const auto& name : frame.names()) out << ',' << name;
    out << '\n';
    std::vector<const std::vector<double>*> cols;
    for (const auto& name : frame.names()) cols.push_back(&frame.column(name));
    for (std::size_t r = 0; r < frame.size(); ++r) {
        out << frame.time_at(r);
        for (const auto* col : cols) out << ',' << format_real((*col)[r]);
        out << '\n';
    }
}

void write_frame_csv(const std::filesystem::path& path, const Frame& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    write_frame_csv(out, frame);
}

} // namespace edmpc
