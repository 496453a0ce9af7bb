#include "swe/configfile.hpp"

#include "swe/io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace swe::cfg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: key '" + key + "' needs a number, got '" + v + "'");
    return x;
}

long long parse_int(const std::string& key, const std::string& v) {
    long long x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError("config: key '" + key + "' needs an integer, got '" + v + "'");
    return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError("config: key '" + key +
                          "' needs a nonnegative integer, got '" + v + "'");
    return x;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> parts;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

// One dispatch row per accepted key; anything else is a strict-mode error.
using Setter = std::function<void(ExperimentConfig&, const std::string& key,
                                  const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    auto dbl = [](double ExperimentConfig::* f) {
        return [f](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*f = parse_double(k, v);
        };
    };
    auto intf = [](int ExperimentConfig::* f) {
        return [f](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*f = static_cast<int>(parse_int(k, v));
        };
    };
    auto str = [](std::string ExperimentConfig::* f) {
        return [f](ExperimentConfig& c, const std::string&, const std::string& v) {
            c.*f = v;
        };
    };
    auto axis = [](std::array<int, 3> ExperimentConfig::* f, int a) {
        return [f, a](ExperimentConfig& c, const std::string& k, const std::string& v) {
            (c.*f)[a] = static_cast<int>(parse_int(k, v));
        };
    };
    static const std::map<std::string, Setter> table = {
        {"grid.L", dbl(&ExperimentConfig::L)},
        {"grid.N", intf(&ExperimentConfig::N)},
        {"time.T", dbl(&ExperimentConfig::T)},
        {"time.J", intf(&ExperimentConfig::J)},
        {"noise.beta", dbl(&ExperimentConfig::beta)},
        {"noise.phi", str(&ExperimentConfig::phi)},
        {"noise.value", dbl(&ExperimentConfig::phi_value)},
        {"noise.amplitude", dbl(&ExperimentConfig::phi_amplitude)},
        {"noise.width", dbl(&ExperimentConfig::phi_width)},
        {"noise.delta", dbl(&ExperimentConfig::delta)},
        {"noise.seed",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.seed = parse_u64(k, v);
         }},
        {"noise.epsilon", dbl(&ExperimentConfig::epsilon)},
        {"init.family", str(&ExperimentConfig::init_family)},
        {"init.amplitude", dbl(&ExperimentConfig::init_amplitude)},
        {"init.mode_x", axis(&ExperimentConfig::init_mode, 0)},
        {"init.mode_y", axis(&ExperimentConfig::init_mode, 1)},
        {"init.mode_z", axis(&ExperimentConfig::init_mode, 2)},
        {"init.radius", dbl(&ExperimentConfig::init_radius)},
        {"init.steepness", dbl(&ExperimentConfig::init_steepness)},
        {"init.gamma1", dbl(&ExperimentConfig::gamma1)},
        {"init.gamma2", dbl(&ExperimentConfig::gamma2)},
        {"coeffs.sigma", str(&ExperimentConfig::sigma_family)},
        {"coeffs.sigma_value", dbl(&ExperimentConfig::sigma_value)},
        {"coeffs.sigma_slope", dbl(&ExperimentConfig::sigma_slope)},
        {"coeffs.b", str(&ExperimentConfig::b_family)},
        {"coeffs.b_value", dbl(&ExperimentConfig::b_value)},
        {"coeffs.b_slope", dbl(&ExperimentConfig::b_slope)},
        {"event.kind", str(&ExperimentConfig::event_kind)},
        {"event.threshold", dbl(&ExperimentConfig::threshold)},
        {"event.site_x", axis(&ExperimentConfig::site, 0)},
        {"event.site_y", axis(&ExperimentConfig::site, 1)},
        {"event.site_z", axis(&ExperimentConfig::site, 2)},
        {"event.box_lo_x", axis(&ExperimentConfig::box_lo, 0)},
        {"event.box_lo_y", axis(&ExperimentConfig::box_lo, 1)},
        {"event.box_lo_z", axis(&ExperimentConfig::box_lo, 2)},
        {"event.box_hi_x", axis(&ExperimentConfig::box_hi, 0)},
        {"event.box_hi_y", axis(&ExperimentConfig::box_hi, 1)},
        {"event.box_hi_z", axis(&ExperimentConfig::box_hi, 2)},
        {"event.mode_x", axis(&ExperimentConfig::event_mode, 0)},
        {"event.mode_y", axis(&ExperimentConfig::event_mode, 1)},
        {"event.mode_z", axis(&ExperimentConfig::event_mode, 2)},
        {"ladder.epsilons",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.epsilons.clear();
             for (const std::string& s : split_list(v))
                 c.epsilons.push_back(parse_double(k, s));
             if (c.epsilons.empty())
                 throw ConfigError("config: key '" + k + "' needs a nonempty list");
         }},
        {"ladder.M", intf(&ExperimentConfig::M)},
        {"optimizer.K", intf(&ExperimentConfig::K)},
        {"optimizer.restarts", intf(&ExperimentConfig::restarts)},
        {"optimizer.outer", intf(&ExperimentConfig::outer)},
        {"optimizer.inner", intf(&ExperimentConfig::inner)},
        {"optimizer.penalty_init", dbl(&ExperimentConfig::penalty_init)},
        {"optimizer.penalty_growth", dbl(&ExperimentConfig::penalty_growth)},
        {"optimizer.sharpness_init", dbl(&ExperimentConfig::sharpness_init)},
        {"optimizer.sharpness_growth", dbl(&ExperimentConfig::sharpness_growth)},
        {"optimizer.norm_bound", dbl(&ExperimentConfig::norm_bound)},
        {"optimizer.tolerance", dbl(&ExperimentConfig::tolerance)},
        {"holder.alpha", dbl(&ExperimentConfig::holder_alpha)},
        {"holder.q", dbl(&ExperimentConfig::holder_q)},
        {"holder.trajectories", intf(&ExperimentConfig::holder_trajectories)},
        {"holder.lags",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.holder_lags.clear();
             for (const std::string& s : split_list(v))
                 c.holder_lags.push_back(static_cast<int>(parse_int(k, s)));
             if (c.holder_lags.empty())
                 throw ConfigError("config: key '" + k + "' needs a nonempty list");
         }},
        {"output.directory", str(&ExperimentConfig::out_dir)},
        {"output.formats", str(&ExperimentConfig::out_formats)},
    };
    return table;
}

void apply(ExperimentConfig& c, const std::string& dotted, const std::string& value,
           const std::string& where) {
    auto it = setters().find(dotted);
    if (it == setters().end())
        throw ConfigError("config: unknown key '" + dotted + "' (" + where + ")");
    it->second(c, dotted, value);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_text(const std::string& text,
                                             const std::vector<std::string>& overrides) {
    ExperimentConfig c;
    std::stringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(lineno));
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ConfigError("config: empty section name at line " +
                                  std::to_string(lineno));
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " +
                              std::to_string(lineno));
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config: key '" + key + "' outside any section at line " +
                              std::to_string(lineno));
        apply(c, section + "." + key, value, "line " + std::to_string(lineno));
    }
    for (const std::string& ov : overrides) {
        std::size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: override '" + ov + "' must be section.key=value");
        apply(c, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)), "override");
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str(), overrides);
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream out;
    auto d = [](double v) { return io::format_double(v); };
    auto ints = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    auto dbls = [&](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + d(v[i]);
        return s;
    };
    out << "[grid]\nL = " << d(L) << "\nN = " << N << "\n";
    out << "[time]\nT = " << d(T) << "\nJ = " << J << "\n";
    out << "[noise]\nbeta = " << d(beta) << "\ndelta = " << d(delta)
        << "\nepsilon = " << d(epsilon) << "\nphi = " << phi
        << "\namplitude = " << d(phi_amplitude) << "\nvalue = " << d(phi_value)
        << "\nwidth = " << d(phi_width) << "\nseed = " << seed << "\n";
    out << "[init]\nfamily = " << init_family << "\namplitude = " << d(init_amplitude)
        << "\ngamma1 = " << d(gamma1) << "\ngamma2 = " << d(gamma2)
        << "\nmode_x = " << init_mode[0] << "\nmode_y = " << init_mode[1]
        << "\nmode_z = " << init_mode[2] << "\nradius = " << d(init_radius)
        << "\nsteepness = " << d(init_steepness) << "\n";
    out << "[coeffs]\nb = " << b_family << "\nb_slope = " << d(b_slope)
        << "\nb_value = " << d(b_value) << "\nsigma = " << sigma_family
        << "\nsigma_slope = " << d(sigma_slope) << "\nsigma_value = " << d(sigma_value)
        << "\n";
    out << "[event]\nbox_hi_x = " << box_hi[0] << "\nbox_hi_y = " << box_hi[1]
        << "\nbox_hi_z = " << box_hi[2] << "\nbox_lo_x = " << box_lo[0]
        << "\nbox_lo_y = " << box_lo[1] << "\nbox_lo_z = " << box_lo[2]
        << "\nkind = " << event_kind << "\nmode_x = " << event_mode[0]
        << "\nmode_y = " << event_mode[1] << "\nmode_z = " << event_mode[2]
        << "\nsite_x = " << site[0] << "\nsite_y = " << site[1]
        << "\nsite_z = " << site[2] << "\nthreshold = " << d(threshold) << "\n";
    out << "[ladder]\nM = " << M << "\nepsilons = " << dbls(epsilons) << "\n";
    out << "[optimizer]\nK = " << K << "\ninner = " << inner
        << "\nnorm_bound = " << d(norm_bound) << "\nouter = " << outer
        << "\npenalty_growth = " << d(penalty_growth)
        << "\npenalty_init = " << d(penalty_init) << "\nrestarts = " << restarts
        << "\nsharpness_growth = " << d(sharpness_growth)
        << "\nsharpness_init = " << d(sharpness_init)
        << "\ntolerance = " << d(tolerance) << "\n";
    out << "[holder]\nalpha = " << d(holder_alpha) << "\nlags = " << ints(holder_lags)
        << "\nq = " << d(holder_q) << "\ntrajectories = " << holder_trajectories << "\n";
    out << "[output]\ndirectory = " << out_dir << "\nformats = " << out_formats << "\n";
    return out.str();
}

std::string ExperimentConfig::hash() const { return io::hex16(io::fnv1a(canonical())); }

}  // namespace swe::cfg
