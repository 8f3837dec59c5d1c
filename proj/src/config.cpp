// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file config.cpp
//---------------------------------------------------------------------------//
#include "mbsde/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mbsde/types.hpp"

namespace mbsde
{
namespace
{
[[noreturn]] void invalid(std::string const& what)
{
    throw Error(ErrorCode::config_invalid, what);
}

//---------------------------------------------------------------------------//
class TomlParser
{
  public:
    explicit TomlParser(std::string_view text) : s_(text) {}

    nlohmann::json parse()
    {
        nlohmann::json root = nlohmann::json::object();
        nlohmann::json* table = &root;
        while (true)
        {
            skip_blank_lines();
            if (done())
            {
                break;
            }
            if (peek() == '[')
            {
                ++pos_;
                skip_inline_space();
                std::string const name = bare_key();
                skip_inline_space();
                expect(']');
                if (root.contains(name))
                {
                    fail("duplicate table [" + name + "]");
                }
                root[name] = nlohmann::json::object();
                table = &root[name];
            }
            else
            {
                std::string const key = bare_key();
                skip_inline_space();
                expect('=');
                skip_inline_space();
                if (table->contains(key))
                {
                    fail("duplicate key " + key);
                }
                (*table)[key] = value();
            }
            end_of_line();
        }
        return root;
    }

  private:
    bool done() const { return pos_ >= s_.size(); }
    char peek() const { return done() ? '\0' : s_[pos_]; }

    [[noreturn]] void fail(std::string const& what) const
    {
        std::size_t const line
            = 1 + std::count(s_.begin(), s_.begin() + std::min(pos_, s_.size()),
                             '\n');
        invalid("TOML line " + std::to_string(line) + ": " + what);
    }

    void expect(char c)
    {
        if (peek() != c)
        {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    void skip_comment()
    {
        if (peek() == '#')
        {
            while (!done() && peek() != '\n')
            {
                ++pos_;
            }
        }
    }

    void skip_inline_space()
    {
        while (peek() == ' ' || peek() == '\t' || peek() == '\r')
        {
            ++pos_;
        }
    }

    //! Whitespace, newlines and comments.
    void skip_any_space()
    {
        while (!done())
        {
            skip_inline_space();
            skip_comment();
            if (peek() == '\n')
            {
                ++pos_;
                continue;
            }
            break;
        }
    }

    void skip_blank_lines() { skip_any_space(); }

    void end_of_line()
    {
        skip_inline_space();
        skip_comment();
        if (!done() && peek() != '\n')
        {
            fail("trailing characters");
        }
    }

    std::string bare_key()
    {
        std::size_t const start = pos_;
        while (!done()
               && (std::isalnum(static_cast<unsigned char>(peek()))
                   || peek() == '_' || peek() == '-'))
        {
            ++pos_;
        }
        if (pos_ == start)
        {
            fail("expected a key");
        }
        return std::string(s_.substr(start, pos_ - start));
    }

    nlohmann::json value()
    {
        char const c = peek();
        if (c == '"')
        {
            return string_value();
        }
        if (c == '[')
        {
            return array_value();
        }
        if (s_.substr(pos_, 4) == "true")
        {
            pos_ += 4;
            return true;
        }
        if (s_.substr(pos_, 5) == "false")
        {
            pos_ += 5;
            return false;
        }
        return number_value();
    }

    nlohmann::json string_value()
    {
        expect('"');
        std::string out;
        while (true)
        {
            if (done() || peek() == '\n')
            {
                fail("unterminated string");
            }
            char c = s_[pos_++];
            if (c == '"')
            {
                break;
            }
            if (c == '\\')
            {
                char const e = done() ? '\0' : s_[pos_++];
                switch (e)
                {
                    case '"':
                    case '\\':
                        c = e;
                        break;
                    case 'n':
                        c = '\n';
                        break;
                    case 't':
                        c = '\t';
                        break;
                    default:
                        fail("unsupported escape");
                }
            }
            out.push_back(c);
        }
        return out;
    }

    nlohmann::json array_value()
    {
        expect('[');
        nlohmann::json out = nlohmann::json::array();
        skip_any_space();
        if (peek() == ']')
        {
            ++pos_;
            return out;
        }
        while (true)
        {
            skip_any_space();
            out.push_back(value());
            skip_any_space();
            if (peek() == ',')
            {
                ++pos_;
                skip_any_space();
                if (peek() == ']')
                {
                    ++pos_;
                    return out;
                }
                continue;
            }
            expect(']');
            return out;
        }
    }

    nlohmann::json number_value()
    {
        std::size_t const start = pos_;
        while (!done()
               && (std::isalnum(static_cast<unsigned char>(peek()))
                   || peek() == '+' || peek() == '-' || peek() == '.'
                   || peek() == '_'))
        {
            ++pos_;
        }
        std::string token(s_.substr(start, pos_ - start));
        token.erase(std::remove(token.begin(), token.end(), '_'), token.end());
        if (token.empty())
        {
            fail("expected a value");
        }
        // from_chars rejects a leading '+'
        std::string_view body = token;
        if (body.front() == '+')
        {
            body.remove_prefix(1);
        }
        bool const is_float
            = body.find_first_of(".eE") != std::string_view::npos
              || body == "inf" || body == "nan" || body == "-inf";
        char const* first = body.data();
        char const* last = body.data() + body.size();
        if (!is_float)
        {
            long long v = 0;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc{} || ptr != last)
            {
                fail("bad integer '" + token + "'");
            }
            return v;
        }
        double v = 0;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last)
        {
            fail("bad number '" + token + "'");
        }
        return v;
    }

    std::string_view s_;
    std::size_t pos_{0};
};

//---------------------------------------------------------------------------//
// JSON <-> config
//---------------------------------------------------------------------------//

//! Reads keys of one section, rejecting any key it does not know.
class SectionReader
{
  public:
    SectionReader(nlohmann::json const& root, std::string name)
        : name_(std::move(name))
    {
        if (root.contains(name_))
        {
            section_ = &root.at(name_);
            if (!section_->is_object())
            {
                invalid("[" + name_ + "] must be a table");
            }
        }
    }

    template<class T>
    void read(char const* key, T& dst)
    {
        seen_.insert(key);
        if (!section_ || !section_->contains(key))
        {
            return;
        }
        try
        {
            dst = section_->at(key).get<T>();
        }
        catch (nlohmann::json::exception const&)
        {
            invalid(name_ + "." + key + " has the wrong type");
        }
    }

    void read_number(char const* key, double& dst)
    {
        seen_.insert(key);
        if (!section_ || !section_->contains(key))
        {
            return;
        }
        auto const& v = section_->at(key);
        if (!v.is_number())
        {
            invalid(name_ + "." + key + " must be a number");
        }
        dst = v.get<double>();
    }

    void read_numbers(char const* key, std::vector<double>& dst)
    {
        seen_.insert(key);
        if (!section_ || !section_->contains(key))
        {
            return;
        }
        auto const& v = section_->at(key);
        if (!v.is_array()
            || !std::all_of(v.begin(), v.end(),
                            [](auto const& e) { return e.is_number(); }))
        {
            invalid(name_ + "." + key + " must be an array of numbers");
        }
        dst.clear();
        for (auto const& e : v)
        {
            dst.push_back(e.get<double>());
        }
    }

    nlohmann::json const* raw(char const* key)
    {
        seen_.insert(key);
        if (!section_ || !section_->contains(key))
        {
            return nullptr;
        }
        return &section_->at(key);
    }

    void finish() const
    {
        if (!section_)
        {
            return;
        }
        for (auto const& [key, value] : section_->items())
        {
            if (!seen_.count(key))
            {
                invalid("unknown key " + name_ + "." + key);
            }
        }
    }

  private:
    std::string name_;
    nlohmann::json const* section_{nullptr};
    std::set<std::string> seen_;
};

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool divides(double total, double step)
{
    double const k = std::round(total / step);
    return k >= 1 && std::abs(k * step - total) <= 1e-12 * std::max(1.0, total);
}
}  // namespace

//---------------------------------------------------------------------------//
nlohmann::json parse_toml(std::string_view text)
{
    return TomlParser(text).parse();
}

nlohmann::json to_json(ExperimentConfig const& c)
{
    nlohmann::json j;
    j["problem"] = {
        {"manifold", c.manifold},
        {"tube_radius", c.tube_radius},
        {"generator", c.generator},
        {"generator_param", c.generator_param},
        {"initial_map", c.initial_map},
        {"wave_number", c.wave_number},
        {"constant_point", c.constant_point},
        {"fourier_offset", c.fourier_offset},
        {"fourier_waves", c.fourier_waves},
        {"fourier_cos", c.fourier_cos},
        {"fourier_sin", c.fourier_sin},
    };
    j["grid"] = {
        {"dim", c.dim},
        {"nodes", c.nodes},
        {"final_time", c.final_time},
        {"solver", c.solver},
        {"scheme", c.scheme},
        {"epsilons", c.epsilons},
        {"record_stride", c.record_stride},
    };
    if (c.dt)
    {
        j["grid"]["dt"] = *c.dt;
    }
    else
    {
        j["grid"]["dt"] = "auto";
    }
    j["ensemble"] = {
        {"paths", c.paths},
        {"path_dt", c.path_dt},
        {"starts", c.starts},
        {"seed", c.seed},
        {"checkpoints", c.checkpoints},
        {"martingale_paths", c.martingale_paths},
        {"negative_control", c.negative_control},
    };
    j["diagnostics"] = {
        {"theta0", c.theta0},
        {"scan_radius", c.scan_radius},
        {"kappa", c.kappa},
        {"cap", c.cap},
        {"radii", c.radii},
        {"scan_time_points", c.scan_time_points},
        {"scan_space_points", c.scan_space_points},
    };
    j["output"] = {
        {"dir", c.out_dir},
        {"workers", c.workers},
        {"write_trajectory", c.write_trajectory},
    };
    return j;
}

ExperimentConfig config_from_json(nlohmann::json const& j)
{
    if (!j.is_object())
    {
        invalid("configuration must be a table");
    }
    static std::set<std::string> const sections{
        "problem", "grid", "ensemble", "diagnostics", "output"};
    for (auto const& [key, value] : j.items())
    {
        if (!sections.count(key))
        {
            invalid("unknown section [" + key + "]");
        }
    }

    ExperimentConfig c;
    {
        SectionReader r(j, "problem");
        r.read("manifold", c.manifold);
        r.read_number("tube_radius", c.tube_radius);
        r.read("generator", c.generator);
        r.read_number("generator_param", c.generator_param);
        r.read("initial_map", c.initial_map);
        r.read("wave_number", c.wave_number);
        r.read_numbers("constant_point", c.constant_point);
        r.read_numbers("fourier_offset", c.fourier_offset);
        r.read("fourier_waves", c.fourier_waves);
        r.read("fourier_cos", c.fourier_cos);
        r.read("fourier_sin", c.fourier_sin);
        r.finish();
    }
    {
        SectionReader r(j, "grid");
        r.read("dim", c.dim);
        r.read("nodes", c.nodes);
        r.read_number("final_time", c.final_time);
        if (auto const* dt = r.raw("dt"))
        {
            if (dt->is_string() && dt->get<std::string>() == "auto")
            {
                c.dt.reset();
            }
            else if (dt->is_number())
            {
                c.dt = dt->get<double>();
            }
            else
            {
                invalid("grid.dt must be a number or \"auto\"");
            }
        }
        r.read("solver", c.solver);
        r.read("scheme", c.scheme);
        r.read_numbers("epsilons", c.epsilons);
        r.read("record_stride", c.record_stride);
        r.finish();
    }
    {
        SectionReader r(j, "ensemble");
        r.read("paths", c.paths);
        r.read_number("path_dt", c.path_dt);
        r.read("starts", c.starts);
        r.read("seed", c.seed);
        r.read_numbers("checkpoints", c.checkpoints);
        r.read("martingale_paths", c.martingale_paths);
        r.read("negative_control", c.negative_control);
        r.finish();
    }
    {
        SectionReader r(j, "diagnostics");
        r.read_number("theta0", c.theta0);
        r.read_number("scan_radius", c.scan_radius);
        r.read_number("kappa", c.kappa);
        r.read_number("cap", c.cap);
        r.read_numbers("radii", c.radii);
        r.read("scan_time_points", c.scan_time_points);
        r.read("scan_space_points", c.scan_space_points);
        r.finish();
    }
    {
        SectionReader r(j, "output");
        r.read("dir", c.out_dir);
        r.read("workers", c.workers);
        r.read("write_trajectory", c.write_trajectory);
        r.finish();
    }
    return c;
}

ExperimentConfig parse_config(std::string_view text, bool json)
{
    nlohmann::json j;
    if (json)
    {
        try
        {
            j = nlohmann::json::parse(text);
        }
        catch (nlohmann::json::parse_error const& e)
        {
            invalid(std::string("JSON: ") + e.what());
        }
    }
    else
    {
        j = parse_toml(text);
    }
    return config_from_json(j);
}

ExperimentConfig load_config(std::filesystem::path const& path)
{
    std::ifstream is(path);
    if (!is)
    {
        throw Error(ErrorCode::io_failure, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.extension() == ".json");
}

//---------------------------------------------------------------------------//
void validate(ExperimentConfig const& c)
{
    static std::set<std::string> const manifolds{"sphere1", "sphere2",
                                                 "sphere3", "torus2"};
    static std::set<std::string> const generators{"zero", "rotation",
                                                  "shear"};
    static std::set<std::string> const maps{"constant", "great_circle",
                                            "sphere_collapse", "fourier"};
    if (!manifolds.count(c.manifold))
    {
        invalid("unknown manifold '" + c.manifold + "'");
    }
    if (!(c.tube_radius > 0) || !(3 * c.tube_radius < 1))
    {
        invalid("tube_radius must lie in (0, 1/3)");
    }
    if (!generators.count(c.generator))
    {
        invalid("unknown generator '" + c.generator + "'");
    }
    if (!std::isfinite(c.generator_param))
    {
        invalid("generator_param must be finite");
    }
    if (!maps.count(c.initial_map))
    {
        invalid("unknown initial map '" + c.initial_map + "'");
    }
    if (c.initial_map == "great_circle" && c.wave_number < 1)
    {
        invalid("wave_number must be positive");
    }
    if (c.initial_map == "sphere_collapse" && c.manifold != "sphere2")
    {
        invalid("sphere_collapse maps into sphere2");
    }
    if (c.initial_map == "fourier")
    {
        std::size_t const terms = c.fourier_waves.size();
        if (c.fourier_cos.size() != terms || c.fourier_sin.size() != terms)
        {
            invalid("fourier_waves, fourier_cos and fourier_sin must align");
        }
    }
    if (c.dim != 1 && c.dim != 2)
    {
        invalid("dim must be 1 or 2");
    }
    if (c.nodes < 8)
    {
        invalid("nodes must be at least 8");
    }
    if (!(c.final_time > 0) || !std::isfinite(c.final_time))
    {
        invalid("final_time must be positive");
    }
    if (c.dt)
    {
        if (!(*c.dt > 0))
        {
            invalid("dt must be positive");
        }
        if (!divides(c.final_time, *c.dt))
        {
            invalid("dt must divide final_time");
        }
    }
    if (c.solver != "penalized" && c.solver != "intrinsic")
    {
        invalid("solver must be penalized or intrinsic");
    }
    if (c.solver == "intrinsic" && c.dim != 1)
    {
        invalid("the intrinsic solver needs dim = 1");
    }
    if (c.scheme != "imex" && c.scheme != "explicit")
    {
        invalid("scheme must be imex or explicit");
    }
    if (c.solver == "penalized" && c.epsilons.empty())
    {
        invalid("the penalized solver needs at least one epsilon");
    }
    for (double e : c.epsilons)
    {
        if (!(e > 0))
        {
            invalid("epsilons must be positive");
        }
    }
    if (c.record_stride < 1)
    {
        invalid("record_stride must be at least 1");
    }
    if (!(c.path_dt > 0) || !divides(c.final_time, c.path_dt))
    {
        invalid("path_dt must be positive and divide final_time");
    }
    if (c.starts < 1)
    {
        invalid("starts must be at least 1");
    }
    if (c.martingale_paths > 0 && c.martingale_paths < 100)
    {
        invalid("martingale_paths must be 0 or at least 100");
    }
    for (double t : c.checkpoints)
    {
        if (!(t >= 0 && t <= c.final_time * (1 + 1e-12)))
        {
            invalid("checkpoints must lie in [0, final_time]");
        }
        double const k = std::round(t / c.path_dt);
        if (std::abs(k * c.path_dt - t) > 1e-9 * std::max(1.0, t))
        {
            invalid("checkpoints must lie on the path_dt grid");
        }
    }
    if (!(c.theta0 > 0) || !(c.scan_radius > 0) || !(c.kappa > 0)
        || !(c.cap >= 0))
    {
        invalid("theta0, scan_radius, kappa must be positive, cap >= 0");
    }
    for (double r : c.radii)
    {
        if (!(r > 0 && r < 0.5))
        {
            invalid("radii must lie in (0, 1/2)");
        }
    }
    if (c.scan_time_points < 1 || c.scan_space_points < 1)
    {
        invalid("scan lattice sizes must be positive");
    }
    if (c.workers < 1)
    {
        invalid("workers must be at least 1");
    }
}

std::string config_hash(ExperimentConfig const& cfg)
{
    nlohmann::json j = to_json(cfg);
    j["output"].erase("dir");
    j["output"].erase("workers");
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

}  // namespace mbsde
