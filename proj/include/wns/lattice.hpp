#pragma once

// Space-time lattice windows and arrow fields.
//
// Forward systems live on the even sublattice (x + t even), dual systems on
// the odd one. A window stores only sites of its parity, row-major in t,
// positions stepping by 2 within a row.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wns {

enum class Parity : std::uint8_t { Even = 0, Odd = 1 };

struct Site {
    std::int32_t x = 0;
    std::int32_t t = 0;
    friend bool operator==(const Site&, const Site&) = default;
    friend auto operator<=>(const Site&, const Site&) = default;
};

struct LatticeWindow {
    std::int32_t x_min = 0, x_max = 0;
    std::int32_t t_min = 0, t_max = 0;
    Parity parity = Parity::Even;

    void validate() const {
        if (x_min >= x_max || t_min >= t_max)
            throw std::invalid_argument("LatticeWindow: need x_min < x_max and t_min < t_max");
    }

    bool on_sublattice(std::int32_t x, std::int32_t t) const {
        const int want = (parity == Parity::Even) ? 0 : 1;
        return ((x + t) & 1) == want;
    }

    bool contains(std::int32_t x, std::int32_t t) const {
        return x >= x_min && x <= x_max && t >= t_min && t <= t_max && on_sublattice(x, t);
    }

    // First valid x in row t, stepping by 2 afterwards.
    std::int32_t row_first_x(std::int32_t t) const {
        const int want = (parity == Parity::Even) ? 0 : 1;
        std::int32_t x = x_min;
        if (((x + t) & 1) != want) ++x;
        return x;
    }

    std::int64_t row_size(std::int32_t t) const {
        const std::int32_t x0 = row_first_x(t);
        if (x0 > x_max) return 0;
        return (std::int64_t(x_max) - x0) / 2 + 1;
    }

    std::int64_t n_rows() const { return std::int64_t(t_max) - t_min + 1; }
    std::int64_t n_sites() const {
        std::int64_t n = 0;
        for (std::int32_t t = t_min; t <= t_max; ++t) n += row_size(t);
        return n;
    }
};

// Per-site arrow configuration. The 2-bit codes double as the serialized form.
enum class Arrow : std::uint8_t { None = 0, Left = 1, Right = 2, Both = 3 };

inline bool has_left(Arrow a) { return a == Arrow::Left || a == Arrow::Both; }
inline bool has_right(Arrow a) { return a == Arrow::Right || a == Arrow::Both; }

enum class FieldKind : std::uint8_t { Web = 0, Net = 1, NetKill = 2, Dual = 3 };

inline const char* to_string(FieldKind k) {
    switch (k) {
        case FieldKind::Web: return "web";
        case FieldKind::Net: return "net";
        case FieldKind::NetKill: return "net-with-killing";
        case FieldKind::Dual: return "dual";
    }
    return "?";
}

class ArrowField {
  public:
    ArrowField() = default;

    ArrowField(const LatticeWindow& w, FieldKind kind)
        : window_(w), kind_(kind) {
        w.validate();
        row_offset_.reserve(std::size_t(w.n_rows()) + 1);
        std::int64_t off = 0;
        for (std::int32_t t = w.t_min; t <= w.t_max; ++t) {
            row_offset_.push_back(off);
            off += w.row_size(t);
        }
        row_offset_.push_back(off);
        cells_.assign(std::size_t(off), std::uint8_t(Arrow::None));
    }

    const LatticeWindow& window() const { return window_; }
    FieldKind kind() const { return kind_; }
    std::int64_t n_sites() const { return std::int64_t(cells_.size()); }

    std::int64_t index(std::int32_t x, std::int32_t t) const {
        if (!window_.contains(x, t))
            throw std::out_of_range("ArrowField: site (" + std::to_string(x) + "," +
                                    std::to_string(t) + ") outside window");
        return row_offset_[std::size_t(t - window_.t_min)] + (x - window_.row_first_x(t)) / 2;
    }

    Arrow arrow(std::int32_t x, std::int32_t t) const {
        return Arrow(cells_[std::size_t(index(x, t))]);
    }
    void set_arrow(std::int32_t x, std::int32_t t, Arrow a) {
        cells_[std::size_t(index(x, t))] = std::uint8_t(a);
    }

    // Raw row access for the evolution engines.
    const std::uint8_t* row(std::int32_t t) const {
        return cells_.data() + row_offset_[std::size_t(t - window_.t_min)];
    }
    std::uint8_t* row(std::int32_t t) {
        return cells_.data() + row_offset_[std::size_t(t - window_.t_min)];
    }

    const std::vector<std::uint8_t>& cells() const { return cells_; }
    std::vector<std::uint8_t>& cells() { return cells_; }

    friend bool operator==(const ArrowField& a, const ArrowField& b) {
        return a.window_.x_min == b.window_.x_min && a.window_.x_max == b.window_.x_max &&
               a.window_.t_min == b.window_.t_min && a.window_.t_max == b.window_.t_max &&
               a.window_.parity == b.window_.parity && a.kind_ == b.kind_ && a.cells_ == b.cells_;
    }

  private:
    LatticeWindow window_;
    FieldKind kind_ = FieldKind::Web;
    std::vector<std::int64_t> row_offset_;
    std::vector<std::uint8_t> cells_;
};

// Per-site right-jump probabilities.
class Environment {
  public:
    Environment() = default;
    explicit Environment(const LatticeWindow& w) : window_(w) {
        w.validate();
        row_offset_.reserve(std::size_t(w.n_rows()) + 1);
        std::int64_t off = 0;
        for (std::int32_t t = w.t_min; t <= w.t_max; ++t) {
            row_offset_.push_back(off);
            off += w.row_size(t);
        }
        row_offset_.push_back(off);
        omega_.assign(std::size_t(off), 0.5);
    }

    const LatticeWindow& window() const { return window_; }
    std::int64_t n_sites() const { return std::int64_t(omega_.size()); }

    std::int64_t index(std::int32_t x, std::int32_t t) const {
        if (!window_.contains(x, t))
            throw std::out_of_range("Environment: site outside window");
        return row_offset_[std::size_t(t - window_.t_min)] + (x - window_.row_first_x(t)) / 2;
    }

    double omega(std::int32_t x, std::int32_t t) const { return omega_[std::size_t(index(x, t))]; }
    void set_omega(std::int32_t x, std::int32_t t, double w) {
        if (w < 0.0 || w > 1.0) throw std::invalid_argument("Environment: omega outside [0,1]");
        omega_[std::size_t(index(x, t))] = w;
    }

    const double* row(std::int32_t t) const {
        return omega_.data() + row_offset_[std::size_t(t - window_.t_min)];
    }
    double* row(std::int32_t t) {
        return omega_.data() + row_offset_[std::size_t(t - window_.t_min)];
    }

    const std::vector<double>& values() const { return omega_; }
    std::vector<double>& values() { return omega_; }

    friend bool operator==(const Environment& a, const Environment& b) {
        return a.window_.x_min == b.window_.x_min && a.window_.x_max == b.window_.x_max &&
               a.window_.t_min == b.window_.t_min && a.window_.t_max == b.window_.t_max &&
               a.window_.parity == b.window_.parity && a.omega_ == b.omega_;
    }

  private:
    LatticeWindow window_;
    std::vector<std::int64_t> row_offset_;
    std::vector<double> omega_;
};

}  // namespace wns
