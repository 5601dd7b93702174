#ifndef EDMPC_FRAME_HPP
#define EDMPC_FRAME_HPP

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace edmpc {

/// Time-indexed table of real-valued columns. Times are integer ticks with
/// unit step starting at start_time(); every column has size() entries.
class Frame {
public:
    Frame() = default;
    explicit Frame(long start_time) : start_time_(start_time) {}

    long start_time() const noexcept { return start_time_; }
    long end_time() const noexcept { return start_time_ + static_cast<long>(rows_) - 1; }
    std::size_t size() const noexcept { return rows_; }
    bool empty() const noexcept { return rows_ == 0; }
    long time_at(std::size_t row) const noexcept { return start_time_ + static_cast<long>(row); }

    /// Row index for a tick, or throws DataError when out of range.
    std::size_t row_of(long time) const;

    const std::vector<std::string>& names() const noexcept { return names_; }
    bool has_column(std::string_view name) const noexcept;
    const std::vector<double>& column(std::string_view name) const;

    /// Adds a column. The first column fixes the row count; later ones must match.
    void add_column(std::string name, std::vector<double> values);

    /// Appends one record; values are in names() order.
    void append_row(std::span<const double> values);

    void set_value(std::string_view name, std::size_t row, double value);

    /// Rows with first <= time <= last, clipped to the record.
    Frame slice(long first, long last) const;

    bool operator==(const Frame&) const = default;

private:
    std::size_t index_of(std::string_view name) const;

    long start_time_ = 1;
    std::size_t rows_ = 0;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
};

/// Shortest decimal text that parses back to the identical double; "nan" for NaN.
std::string format_real(double value);

/// Parses a numeric CSV field. Empty fields and nan/NaN tokens yield NaN.
double parse_real(std::string_view field);

/// CSV with header row; the first column must be `time`.
Frame read_frame_csv(std::istream& in);
Frame read_frame_csv(const std::filesystem::path& path);

void write_frame_csv(std::ostream& out, const Frame& frame);
void write_frame_csv(const std::filesystem::path& path, const Frame& frame);

/// Splits a line on commas and strips surrounding whitespace and CR.
std::vector<std::string> split_csv_line(std::string_view line);

} // namespace edmpc

#endif
