// config.hpp - strict YAML configuration reading for trace-sim.
//
// Every key a command does not consume is reported as an error together with
// its line number.

#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "tracemem/core.hpp"
#include "tracemem/phase.hpp"

namespace tracecli {

class Section {
public:
    Section() = default;
    Section(YAML::Node node, std::string path);

    static Section load_file(const std::string& file);

    bool valid() const { return static_cast<bool>(node_) && !node_.IsNull(); }
    bool has(const std::string& key) const;
    int line() const;
    const std::string& path() const { return path_; }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt);
    std::size_t count(const std::string& key, std::optional<std::size_t> fallback = std::nullopt);
    std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt);
    bool flag(const std::string& key, bool fallback);
    std::vector<double> numbers(const std::string& key);

    // Missing child sections yield an invalid Section unless required.
    Section child(const std::string& key, bool required = false);
    std::vector<Section> children(const std::string& key);

    // Throws ConfigError naming the first key that was never read.
    void finish() const;

    // ConfigError with this section's line prepended.
    [[noreturn]] void fail(const std::string& message) const;

private:
    YAML::Node get(const std::string& key, bool required);

    YAML::Node node_;
    std::string path_;
    std::set<std::string> used_;
};

// Builders; each consumes and finishes its section.
tracemem::EnsembleConfig read_ensemble(Section s);
tracemem::Grid read_grid(Section s);
tracemem::PulseShape read_pulse(Section s);
tracemem::phase::GeometryConfig read_geometry(Section s);

// {start, stop, points, spacing: linear|log} or {values: [...]}.
std::vector<double> read_range(Section s);

// Runs fn, re-raising a library ConfigError with the section line attached.
template <class F>
auto with_line(const Section& s, F&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const tracemem::ConfigError& e) {
        s.fail(e.what());
    }
}

}  // namespace tracecli
