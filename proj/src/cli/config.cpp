#include "onelap/cli/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "onelap/core.hpp"

namespace onelap::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

double parse_number(const std::string& key, const std::string& v)
{
    errno = 0;
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
    return d;
}

}  // namespace

Config Config::defaults()
{
    Config c;
    c.values_ = {
        {"geometry.kind", "radial"},
        {"geometry.N", "3"},
        {"geometry.R", "3"},
        {"geometry.n", "4096"},
        {"geometry.grading", "2"},
        {"datum.kind", "powerlaw"},
        {"datum.lambda", "2"},
        {"datum.q", "2"},
        {"datum.c", "0"},
        {"solver.eps_start", "auto"},
        {"solver.eps_min", "auto"},
        {"solver.shrink", "0.25"},
        {"solver.tol_fp", "1e-10"},
        {"solver.tol_res", "1e-5"},
        {"solver.max_iterations", "500"},
        {"solver.linear_tol", "1e-12"},
        {"solver.clip", "false"},
        {"verify.suites", "ladder,regularity,power,bound,plateau,accuracy,transformed,comparison"},
        {"verify.pairs", "20"},
        {"verify.family", "mixed"},
        {"verify.ladder_p", "2"},
        {"verify.ladder_j", "12"},
        {"verify.levels", "100,1000,10000"},
        {"verify.power_q", "1.5"},
        {"verify.power_m", "2"},
        {"verify.bound_q", "1.5"},
        {"verify.bound_m", "1.2"},
        {"verify.bound_p", "1.8"},
        {"verify.quadrature_n", "100000"},
        {"verify.accuracy_tol", "1e-2"},
        {"sweep.N", "base"},
        {"sweep.q", "base"},
        {"sweep.lambda", "base"},
        {"sweep.n", "base"},
        {"sweep.eps", "base"},
        {"seed", "1"},
    };
    return c;
}

void Config::merge_text(const std::string& text, const std::string& origin)
{
    std::stringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void Config::merge_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot read '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    merge_text(buf.str(), path);
}

void Config::merge_override(const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value)
{
    if (!values_.count(key))
        throw ConfigError("config: unknown key '" + key + "'");
    values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

const std::string& Config::text(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("config: unknown key '" + key + "'");
    return it->second;
}

double Config::number(const std::string& key) const { return parse_number(key, text(key)); }

long Config::integer(const std::string& key) const
{
    const double d = number(key);
    if (d != double(long(d)))
        throw ConfigError("config: '" + key + "' expects an integer");
    return long(d);
}

bool Config::flag(const std::string& key) const
{
    const auto& v = text(key);
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError("config: '" + key + "' expects true or false");
}

std::vector<double> Config::numbers(const std::string& key) const
{
    std::vector<double> out;
    for (const auto& w : split(text(key)))
        out.push_back(parse_number(key, w));
    return out;
}

std::vector<std::string> Config::words(const std::string& key) const { return split(text(key)); }

std::string Config::canonical() const
{
    std::string out;
    for (const auto& [k, v] : values_)
        out += k + "=" + v + "\n";
    return out;
}

std::uint64_t fnv1a(const std::string& data)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string Config::hash() const
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
    return buf;
}

}  // namespace onelap::cli
