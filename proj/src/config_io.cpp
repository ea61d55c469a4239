#include "thzris/config_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace thzris {

namespace {

std::string trim(const std::string &s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string &s, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        parts.push_back(trim(cur));
    if (!s.empty() && s.back() == sep)
        parts.emplace_back();
    return parts;
}

long long parse_int(const std::string &text)
{
    const std::string t = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw std::invalid_argument("expected an integer, got '" + text + "'");
    return v;
}

int parse_count(const std::string &text)
{
    const long long v = parse_int(text);
    if (v < -1000000 || v > 1000000)
        throw std::invalid_argument("integer out of range: '" + text + "'");
    return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string &text)
{
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw std::invalid_argument("expected an unsigned integer, got '" + text + "'");
    return v;
}

std::vector<double> parse_doubles(const std::string &text)
{
    std::vector<double> out;
    if (trim(text).empty())
        return out;
    for (const auto &p : split(text, ','))
        out.push_back(parse_double(p));
    return out;
}

std::vector<int> parse_ints(const std::string &text)
{
    std::vector<int> out;
    for (const auto &p : split(text, ','))
        out.push_back(parse_count(p));
    return out;
}

std::vector<Vec3> parse_points(const std::string &text)
{
    std::vector<Vec3> out;
    for (const auto &p : split(text, ';'))
    {
        const auto xyz = parse_doubles(p);
        if (xyz.size() != 3)
            throw std::invalid_argument("ris_pos entries need three coordinates, got '" + p + "'");
        out.push_back({xyz[0], xyz[1], xyz[2]});
    }
    return out;
}

template <class T, class F>
std::string join(const std::vector<T> &v, const char *sep, F fmt)
{
    std::string s;
    for (size_t i = 0; i < v.size(); ++i)
    {
        if (i > 0)
            s += sep;
        s += fmt(v[i]);
    }
    return s;
}

struct Field
{
    std::function<void(SystemConfig &, const std::string &)> set;
    std::function<std::string(const SystemConfig &)> get;
};

#define THZRIS_DOUBLE(name)                                                                                        \
    {                                                                                                              \
        #name, Field                                                                                               \
        {                                                                                                          \
            [](SystemConfig &c, const std::string &v) { c.name = parse_double(v); },                               \
                [](const SystemConfig &c) { return format_double(c.name); }                                        \
        }                                                                                                          \
    }
#define THZRIS_INT(name)                                                                                           \
    {                                                                                                              \
        #name, Field                                                                                               \
        {                                                                                                          \
            [](SystemConfig &c, const std::string &v) { c.name = parse_count(v); },                                \
                [](const SystemConfig &c) { return std::to_string(c.name); }                                       \
        }                                                                                                          \
    }
#define THZRIS_DOUBLES(name)                                                                                       \
    {                                                                                                              \
        #name, Field                                                                                               \
        {                                                                                                          \
            [](SystemConfig &c, const std::string &v) { c.name = parse_doubles(v); },                              \
                [](const SystemConfig &c) { return join(c.name, ", ", format_double); }                            \
        }                                                                                                          \
    }

const std::vector<std::pair<std::string, Field>> &fields()
{
    static const std::vector<std::pair<std::string, Field>> table = {
        THZRIS_INT(schema_version),
        THZRIS_DOUBLE(fc),
        THZRIS_DOUBLE(bandwidth),
        THZRIS_INT(subcarriers),
        THZRIS_INT(num_aps),
        THZRIS_INT(ap_ny),
        THZRIS_INT(ap_nz),
        THZRIS_INT(num_users),
        THZRIS_INT(user_antennas),
        THZRIS_INT(num_ris),
        THZRIS_INT(ris_ny),
        THZRIS_INT(ris_nz),
        THZRIS_DOUBLE(rate_threshold),
        THZRIS_DOUBLE(beta_max),
        THZRIS_DOUBLES(p_ap_max),
        THZRIS_DOUBLES(p_ris_max),
        THZRIS_DOUBLE(eta_a),
        THZRIS_DOUBLE(eta_r),
        THZRIS_DOUBLE(xi),
        THZRIS_DOUBLE(noise_density),
        THZRIS_DOUBLES(sigma2_ris),
        {"dac_bits", Field{[](SystemConfig &c, const std::string &v) { c.dac_bits = parse_ints(v); },
                           [](const SystemConfig &c) {
                               return join(c.dac_bits, ", ", [](int b) { return std::to_string(b); });
                           }}},
        THZRIS_DOUBLE(p_ap_circuit),
        THZRIS_DOUBLE(p_user_circuit),
        THZRIS_DOUBLE(p_backhaul),
        THZRIS_DOUBLE(p_ris_circuit),
        THZRIS_DOUBLE(p_ris_dc),
        THZRIS_DOUBLE(kappa),
        THZRIS_DOUBLE(d_u),
        {"ris_pos", Field{[](SystemConfig &c, const std::string &v) { c.ris_pos = parse_points(v); },
                          [](const SystemConfig &c) {
                              return join(c.ris_pos, "; ", [](const Vec3 &p) {
                                  return format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.z);
                              });
                          }}},
        {"ris_mode", Field{[](SystemConfig &c, const std::string &v) {
                               const std::string t = trim(v);
                               if (t == "active")
                                   c.ris_mode = RisMode::active;
                               else if (t == "passive")
                                   c.ris_mode = RisMode::passive;
                               else
                                   throw std::invalid_argument("ris_mode must be active or passive, got '" + t + "'");
                           },
                           [](const SystemConfig &c) {
                               return std::string(c.ris_mode == RisMode::active ? "active" : "passive");
                           }}},
        {"seed", Field{[](SystemConfig &c, const std::string &v) { c.seed = parse_u64(v); },
                       [](const SystemConfig &c) { return std::to_string(c.seed); }}},
    };
    return table;
}

#undef THZRIS_DOUBLE
#undef THZRIS_INT
#undef THZRIS_DOUBLES

} // namespace

std::string format_double(double value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc())
        throw std::logic_error("format_double failed");
    return std::string(buf, ptr);
}

double parse_double(const std::string &text)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v))
        throw std::invalid_argument("expected a finite number, got '" + text + "'");
    return v;
}

const std::vector<std::string> &config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto &[name, f] : fields())
            k.push_back(name);
        return k;
    }();
    return keys;
}

void set_config_value(SystemConfig &config, const std::string &key_in, const std::string &value)
{
    const std::string key = trim(key_in);
    if (key == "nt")
    {
        const auto [ny, nz] = square_factor(parse_count(value));
        config.ap_ny = ny;
        config.ap_nz = nz;
        return;
    }
    if (key == "m")
    {
        const auto [ny, nz] = square_factor(parse_count(value));
        config.ris_ny = ny;
        config.ris_nz = nz;
        return;
    }
    if (key == "p_ap_max_dbm")
    {
        config.p_ap_max.assign(static_cast<size_t>(std::max(config.num_aps, 1)), dbm_to_watt(parse_double(value)));
        return;
    }
    if (key == "p_ris_max_dbm")
    {
        config.p_ris_max.assign(static_cast<size_t>(std::max(config.num_ris, 1)), dbm_to_watt(parse_double(value)));
        return;
    }
    for (const auto &[name, f] : fields())
        if (name == key)
        {
            f.set(config, value);
            return;
        }
    throw std::invalid_argument("unknown config key '" + key + "'");
}

SystemConfig parse_config(std::istream &in, SystemConfig base)
{
    std::string line;
    int line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
        try
        {
            set_config_value(base, line.substr(0, eq), line.substr(eq + 1));
        }
        catch (const std::invalid_argument &e)
        {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    base.resize_per_node();
    base.validate();
    return base;
}

SystemConfig load_config_file(const std::string &path, SystemConfig base)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file '" + path + "'");
    return parse_config(in, std::move(base));
}

std::string dump_config(const SystemConfig &config)
{
    std::string out;
    for (const auto &[name, f] : fields())
        out += name + " = " + f.get(config) + "\n";
    return out;
}

} // namespace thzris
