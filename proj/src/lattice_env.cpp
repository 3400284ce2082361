#include "wns/lattice_env.hpp"

#include <json.hpp>

#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace wns {

namespace {

// row-pointer iteration: fn(row_ptr, x, t) per site, no per-site index math
template <class Cell, class Field, class Fn>
void for_each_row_site(Field& f, Fn&& fn) {
    const LatticeWindow& w = f.window();
    for (std::int32_t t = w.t_min; t <= w.t_max; ++t) {
        Cell* row = f.row(t);
        const std::int32_t x0 = w.row_first_x(t);
        const std::int64_t n = w.row_size(t);
        for (std::int64_t j = 0; j < n; ++j) fn(row[j], x0 + 2 * std::int32_t(j), t);
    }
}

}  // namespace

ArrowField gen_web_field(const LatticeWindow& window, SeedSpec seed) {
    window.validate();
    ArrowField f(window, FieldKind::Web);
    for_each_row_site<std::uint8_t>(f, [&](std::uint8_t& cell, std::int32_t x, std::int32_t t) {
        const bool right = draw_u64(seed, Draw::WebArrow, x, t) >> 63;
        cell = std::uint8_t(right ? Arrow::Right : Arrow::Left);
    });
    return f;
}

ArrowField gen_net_field(const LatticeWindow& window, double eps, SeedSpec seed) {
    window.validate();
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("gen_net_field: eps outside [0,1]");
    ArrowField f(window, FieldKind::Net);
    for_each_row_site<std::uint8_t>(f, [&](std::uint8_t& cell, std::int32_t x, std::int32_t t) {
        const auto blk = draw128(seed, Draw::NetArrow, x, t);
        if (to_unit(blk[0]) < eps)
            cell = std::uint8_t(Arrow::Both);
        else
            cell = std::uint8_t((blk[1] >> 63) ? Arrow::Right : Arrow::Left);
    });
    return f;
}

ArrowField gen_kill_field(const LatticeWindow& window, double b, double kappa, SeedSpec seed) {
    window.validate();
    if (b < 0.0 || kappa < 0.0 || b + kappa > 1.0)
        throw std::invalid_argument("gen_kill_field: need b, kappa >= 0 and b + kappa <= 1");
    ArrowField f(window, FieldKind::NetKill);
    for_each_row_site<std::uint8_t>(f, [&](std::uint8_t& cell, std::int32_t x, std::int32_t t) {
        const auto blk = draw128(seed, Draw::KillArrow, x, t);
        const double u = to_unit(blk[0]);
        if (u < b)
            cell = std::uint8_t(Arrow::Both);
        else if (u < b + kappa)
            cell = std::uint8_t(Arrow::None);
        else
            cell = std::uint8_t((blk[1] >> 63) ? Arrow::Right : Arrow::Left);
    });
    return f;
}

Environment gen_environment(const LatticeWindow& window, const MuSpec& mu, SeedSpec seed) {
    window.validate();
    mu.validate_probability();
    Environment env(window);
    const MeasureSampler sampler(mu);
    for_each_row_site<double>(env, [&](double& cell, std::int32_t x, std::int32_t t) {
        cell = sampler.sample(draw_unit(seed, Draw::EnvOmega, x, t));
    });
    return env;
}

ArrowField sample_web_from_env(const Environment& env, SeedSpec seed) {
    ArrowField f(env.window(), FieldKind::Web);
    const LatticeWindow& w = env.window();
    for (std::int32_t t = w.t_min; t <= w.t_max; ++t) {
        const double* omega = env.row(t);
        std::uint8_t* row = f.row(t);
        const std::int32_t x0 = w.row_first_x(t);
        const std::int64_t n = w.row_size(t);
        for (std::int64_t j = 0; j < n; ++j) {
            const bool right =
                draw_unit(seed, Draw::EnvArrow, x0 + 2 * std::int32_t(j), t) < omega[j];
            row[j] = std::uint8_t(right ? Arrow::Right : Arrow::Left);
        }
    }
    return f;
}

ArrowField dual_field(const ArrowField& field) {
    if (field.kind() == FieldKind::NetKill)
        throw std::invalid_argument("dual_field: no dual rule for killing fields");
    const LatticeWindow& w = field.window();
    LatticeWindow dw = w;
    dw.t_min = w.t_min + 1;
    dw.t_max = w.t_max + 1;
    dw.parity = (w.parity == Parity::Even) ? Parity::Odd : Parity::Even;
    // the dual of a dual is a forward field again; classify it by content
    FieldKind out_kind = FieldKind::Dual;
    if (field.kind() == FieldKind::Dual) {
        out_kind = FieldKind::Web;
        for (std::uint8_t c : field.cells())
            if (Arrow(c) == Arrow::Both) {
                out_kind = FieldKind::Net;
                break;
            }
    }
    ArrowField dual(dw, out_kind);
    for_each_row_site<std::uint8_t>(dual, [&](std::uint8_t& cell, std::int32_t x, std::int32_t s) {
        const Arrow fwd = field.arrow(x, s - 1);
        Arrow a = Arrow::None;
        switch (fwd) {
            case Arrow::Left: a = Arrow::Right; break;
            case Arrow::Right: a = Arrow::Left; break;
            case Arrow::Both: a = Arrow::Both; break;
            case Arrow::None:
                throw std::invalid_argument("dual_field: None site has no dual rule");
        }
        cell = std::uint8_t(a);
    });
    return dual;
}

// ---- serialization ----

namespace {

constexpr char kMagic[4] = {'W', 'N', 'S', '1'};
constexpr std::uint16_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = (unsigned char)((std::uint64_t(v) >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw std::runtime_error("wns1: truncated stream");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t(buf[i]) << (8 * i);
    return T(v);
}

void put_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(d));
    std::memcpy(&bits, &d, sizeof(bits));
    put(os, bits);
}

double get_f64(std::istream& is) {
    const std::uint64_t bits = get<std::uint64_t>(is);
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
}

void write_header(std::ostream& os, std::uint8_t payload_kind, const LatticeWindow& w,
                  SeedSpec seed) {
    os.write(kMagic, 4);
    put(os, kVersion);
    put(os, payload_kind);
    put(os, std::uint8_t(w.parity));
    put(os, std::int32_t(w.x_min));
    put(os, std::int32_t(w.x_max));
    put(os, std::int32_t(w.t_min));
    put(os, std::int32_t(w.t_max));
    put(os, seed.master_seed);
    put(os, seed.stream_id);
}

struct Header {
    std::uint8_t payload_kind;
    LatticeWindow window;
    SeedSpec seed;
};

Header read_header(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("wns1: bad magic");
    if (get<std::uint16_t>(is) != kVersion) throw std::runtime_error("wns1: unknown version");
    Header h;
    h.payload_kind = get<std::uint8_t>(is);
    h.window.parity = Parity(get<std::uint8_t>(is));
    h.window.x_min = get<std::int32_t>(is);
    h.window.x_max = get<std::int32_t>(is);
    h.window.t_min = get<std::int32_t>(is);
    h.window.t_max = get<std::int32_t>(is);
    h.seed.master_seed = get<std::uint64_t>(is);
    h.seed.stream_id = get<std::uint64_t>(is);
    return h;
}

constexpr std::uint8_t kKindEnv = 4;

}  // namespace

void save_wns1(const ArrowField& field, SeedSpec seed, std::ostream& os) {
    write_header(os, std::uint8_t(field.kind()), field.window(), seed);
    const auto& cells = field.cells();
    put(os, std::uint64_t(cells.size()));
    std::uint8_t packed = 0;
    int filled = 0;
    for (std::uint8_t c : cells) {
        packed |= std::uint8_t((c & 3u) << (2 * filled));
        if (++filled == 4) {
            put(os, packed);
            packed = 0;
            filled = 0;
        }
    }
    if (filled > 0) put(os, packed);
}

void save_wns1(const Environment& env, SeedSpec seed, std::ostream& os) {
    write_header(os, kKindEnv, env.window(), seed);
    put(os, std::uint64_t(env.values().size()));
    for (double v : env.values()) put_f64(os, v);
}

Wns1Content load_wns1(std::istream& is) {
    const Header h = read_header(is);
    Wns1Content out;
    out.seed = h.seed;
    const std::uint64_t n = get<std::uint64_t>(is);
    if (h.payload_kind == kKindEnv) {
        out.is_environment = true;
        out.env = Environment(h.window);
        if (n != out.env.values().size()) throw std::runtime_error("wns1: size mismatch");
        for (auto& v : out.env.values()) v = get_f64(is);
        return out;
    }
    if (h.payload_kind > 3) throw std::runtime_error("wns1: unknown payload kind");
    out.field = ArrowField(h.window, FieldKind(h.payload_kind));
    if (n != out.field.cells().size()) throw std::runtime_error("wns1: size mismatch");
    auto& cells = out.field.cells();
    std::uint8_t packed = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i % 4 == 0) packed = get<std::uint8_t>(is);
        cells[i] = (packed >> (2 * (i % 4))) & 3u;
    }
    return out;
}

// ---- JSON ----

namespace {

nlohmann::json window_to_json(const LatticeWindow& w) {
    return {{"x_min", w.x_min}, {"x_max", w.x_max}, {"t_min", w.t_min}, {"t_max", w.t_max},
            {"parity", w.parity == Parity::Even ? "even" : "odd"}};
}

LatticeWindow window_from_json(const nlohmann::json& j) {
    LatticeWindow w;
    w.x_min = j.at("x_min").get<std::int32_t>();
    w.x_max = j.at("x_max").get<std::int32_t>();
    w.t_min = j.at("t_min").get<std::int32_t>();
    w.t_max = j.at("t_max").get<std::int32_t>();
    w.parity = (j.at("parity").get<std::string>() == "even") ? Parity::Even : Parity::Odd;
    return w;
}

constexpr char kArrowCode[4] = {'.', 'L', 'R', 'B'};

}  // namespace

std::string field_to_json(const ArrowField& field, SeedSpec seed) {
    const LatticeWindow& w = field.window();
    if (w.n_sites() > 1 << 20)
        throw std::invalid_argument("field_to_json: window too large for JSON export");
    nlohmann::json j;
    j["format"] = "wns-field-1";
    j["kind"] = to_string(field.kind());
    j["window"] = window_to_json(w);
    j["seed"] = {{"master_seed", seed.master_seed}, {"stream_id", seed.stream_id}};
    nlohmann::json rows = nlohmann::json::array();
    for (std::int32_t t = w.t_min; t <= w.t_max; ++t) {
        std::string row;
        for (std::int32_t x = w.row_first_x(t); x <= w.x_max; x += 2)
            row.push_back(kArrowCode[int(field.arrow(x, t))]);
        rows.push_back(row);
    }
    j["rows"] = std::move(rows);
    return j.dump(2);
}

ArrowField field_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "wns-field-1") throw std::runtime_error("field_from_json: bad format");
    const LatticeWindow w = window_from_json(j.at("window"));
    FieldKind kind = FieldKind::Web;
    const std::string ks = j.at("kind").get<std::string>();
    if (ks == "web") kind = FieldKind::Web;
    else if (ks == "net") kind = FieldKind::Net;
    else if (ks == "net-with-killing") kind = FieldKind::NetKill;
    else if (ks == "dual") kind = FieldKind::Dual;
    else throw std::runtime_error("field_from_json: unknown kind");
    ArrowField f(w, kind);
    const auto& rows = j.at("rows");
    std::size_t r = 0;
    for (std::int32_t t = w.t_min; t <= w.t_max; ++t, ++r) {
        const std::string row = rows.at(r).get<std::string>();
        std::size_t i = 0;
        for (std::int32_t x = w.row_first_x(t); x <= w.x_max; x += 2, ++i) {
            Arrow a = Arrow::None;
            switch (row.at(i)) {
                case '.': a = Arrow::None; break;
                case 'L': a = Arrow::Left; break;
                case 'R': a = Arrow::Right; break;
                case 'B': a = Arrow::Both; break;
                default: throw std::runtime_error("field_from_json: bad arrow code");
            }
            f.set_arrow(x, t, a);
        }
    }
    return f;
}

std::string env_to_json(const Environment& env, SeedSpec seed) {
    const LatticeWindow& w = env.window();
    if (w.n_sites() > 1 << 18)
        throw std::invalid_argument("env_to_json: window too large for JSON export");
    nlohmann::json j;
    j["format"] = "wns-env-1";
    j["window"] = window_to_json(w);
    j["seed"] = {{"master_seed", seed.master_seed}, {"stream_id", seed.stream_id}};
    nlohmann::json rows = nlohmann::json::array();
    for (std::int32_t t = w.t_min; t <= w.t_max; ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::int32_t x = w.row_first_x(t); x <= w.x_max; x += 2) row.push_back(env.omega(x, t));
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j.dump(2);
}

Environment env_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "wns-env-1") throw std::runtime_error("env_from_json: bad format");
    const LatticeWindow w = window_from_json(j.at("window"));
    Environment env(w);
    const auto& rows = j.at("rows");
    std::size_t r = 0;
    for (std::int32_t t = w.t_min; t <= w.t_max; ++t, ++r) {
        const auto& row = rows.at(r);
        std::size_t i = 0;
        for (std::int32_t x = w.row_first_x(t); x <= w.x_max; x += 2, ++i)
            env.set_omega(x, t, row.at(i).get<double>());
    }
    return env;
}

}  // namespace wns
