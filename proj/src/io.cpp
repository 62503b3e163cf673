#include "nego/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "nego/errors.hpp"

namespace nego {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw config_error("bad number '" + text + "'");
    return v;
}

long parse_long(const std::string& text) {
    long v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw config_error("bad integer '" + text + "'");
    return v;
}

void write_instance(std::ostream& out, const Instance& instance) {
    out << "grid " << instance.grid.resolution << "\n";
    for (const SampleSet& s : instance.samples) {
        out << "wm " << s.wm_id() << "\n";
        for (std::size_t t = 0; t < s.sample_count(); ++t)
            out << s.thresholds()[t] << " " << format_double(s.values()[t]) << "\n";
    }
    if (instance.allocation) {
        out << "allocation";
        for (int share : instance.allocation->shares) out << " " << share;
        out << "\n";
    }
}

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
    throw config_error("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) {
        if (tok.front() == '#') break;
        tokens.push_back(tok);
    }
    return tokens;
}

} // namespace

Instance read_instance(std::istream& in) {
    Instance instance;
    bool have_grid = false;
    std::string pending_id;
    std::vector<int> pending_shares;
    std::vector<double> pending_values;
    int line_no = 0;

    auto flush_wm = [&](int line) {
        if (pending_id.empty()) return;
        if (pending_shares.empty()) fail(line, "wm '" + pending_id + "' has no samples");
        instance.samples.emplace_back(pending_id, instance.grid, std::move(pending_shares),
                                      std::move(pending_values));
        pending_id.clear();
        pending_shares = {};
        pending_values = {};
    };

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<std::string> tok = tokenize(line);
        if (tok.empty()) continue;
        if (tok[0] == "grid") {
            if (have_grid) fail(line_no, "grid given twice");
            if (tok.size() != 2) fail(line_no, "expected 'grid <resolution>'");
            instance.grid.resolution = static_cast<int>(parse_long(tok[1]));
            if (instance.grid.resolution < 1) fail(line_no, "grid resolution must be positive");
            have_grid = true;
        } else if (tok[0] == "wm") {
            if (!have_grid) fail(line_no, "grid must come before the first wm");
            if (tok.size() != 2) fail(line_no, "expected 'wm <id>'");
            flush_wm(line_no);
            pending_id = tok[1];
        } else if (tok[0] == "allocation") {
            flush_wm(line_no);
            Allocation a;
            for (std::size_t t = 1; t < tok.size(); ++t) a.shares.push_back(static_cast<int>(parse_long(tok[t])));
            instance.allocation = std::move(a);
        } else if (!pending_id.empty()) {
            if (tok.size() != 2) fail(line_no, "expected '<share> <utility>'");
            pending_shares.push_back(static_cast<int>(parse_long(tok[0])));
            pending_values.push_back(parse_double(tok[1]));
        } else {
            fail(line_no, "unexpected '" + tok[0] + "'");
        }
    }
    flush_wm(line_no);
    if (instance.samples.empty()) throw config_error("instance has no WMs");
    if (instance.allocation && instance.allocation->shares.size() != instance.samples.size())
        throw config_error("allocation has " + std::to_string(instance.allocation->shares.size()) +
                           " shares for " + std::to_string(instance.samples.size()) + " WMs");
    return instance;
}

} // namespace nego
