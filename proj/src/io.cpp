#include "gtml/io.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "gtml/errors.hpp"

namespace gtml::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::size_t parse_index(const std::string& s, std::size_t line, const char* what) {
    std::size_t v = 0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw InputError(where(line) + "bad " + what + " '" + s + "'");
    }
    return v;
}

std::string chomp(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

void write_trajectory(std::ostream& out, const Trajectory& traj, const Environment& env) {
    out << kTrajectoryHeader << '\n';
    for (std::size_t t = 0; t < traj.records.size(); ++t) {
        const auto& r = traj.records[t];
        out << (t + 1) << ',' << env.behaviors.label(r.behavior) << ','
            << env.signals.label(r.signal) << ',' << env.users.query(r.user.query).label << ','
            << int(r.user.clicks[0]) << ',' << int(r.user.clicks[1]) << '\n';
    }
}

Trajectory read_trajectory(std::istream& in, const Environment& env) {
    std::string line;
    if (!std::getline(in, line) || chomp(line) != kTrajectoryHeader) {
        throw InputError(where(1) + "expected header '" + kTrajectoryHeader + "'");
    }
    std::unordered_map<std::string, std::size_t> queries;
    for (std::size_t q = 0; q < env.users.num_queries(); ++q) queries[env.users.query(q).label] = q;

    Trajectory traj;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = chomp(line);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 6) throw InputError(where(lineno) + "expected 6 fields");
        if (parse_index(cells[0], lineno, "step") != traj.records.size() + 1) {
            throw InputError(where(lineno) + "steps must count up from 1");
        }
        if (!env.behaviors.contains(cells[1])) {
            throw InputError(where(lineno) + "unknown behavior '" + cells[1] + "'");
        }
        if (!env.signals.contains(cells[2])) {
            throw InputError(where(lineno) + "unknown signal '" + cells[2] + "'");
        }
        const auto q = queries.find(cells[3]);
        if (q == queries.end()) throw InputError(where(lineno) + "unknown query '" + cells[3] + "'");
        TrajectoryRecord rec{env.behaviors.index_of(cells[1]), env.signals.index_of(cells[2]), {}};
        rec.user.query = q->second;
        for (std::size_t k = 0; k < kSlots; ++k) {
            const auto c = parse_index(cells[4 + k], lineno, "click");
            if (c > 1) throw InputError(where(lineno) + "clicks must be 0 or 1");
            rec.user.clicks[k] = static_cast<std::uint8_t>(c);
        }
        traj.records.push_back(rec);
    }
    return traj;
}

void write_model(std::ostream& out, const BehaviorModel& model, const BehaviorSpace& behaviors,
                 const SignalSpace& signals) {
    if (model.num_behaviors() != behaviors.size() || model.num_signals() != signals.size()) {
        throw InputError("model shape does not match the label spaces");
    }
    out << "gtml-model 1\nbehaviors " << behaviors.size();
    for (const auto& l : behaviors.labels()) out << ' ' << l;
    out << "\nsignals " << signals.size();
    for (const auto& l : signals.labels()) out << ' ' << l;
    out << '\n' << std::setprecision(17);
    for (SignalId h = 0; h < signals.size(); ++h) {
        out << "signal " << signals.label(h) << '\n';
        const auto& m = model.matrix(h);
        for (Eigen::Index b = 0; b < m.rows(); ++b) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(b, c);
            out << '\n';
        }
    }
}

BehaviorModel read_model(std::istream& in, const BehaviorSpace& behaviors,
                         const SignalSpace& signals) {
    auto expect_labels = [&](const std::string& key, const LabelSet& set) {
        std::string word;
        std::size_t n = 0;
        if (!(in >> word) || word != key || !(in >> n) || n != set.size()) {
            throw InputError("model file: expected '" + key + " " + std::to_string(set.size()) + "'");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!(in >> word) || word != set.label(i)) {
                throw InputError("model file: " + key + " labels differ from the configured space");
            }
        }
    };
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "gtml-model" || version != 1) {
        throw InputError("model file: missing 'gtml-model 1' header");
    }
    expect_labels("behaviors", behaviors);
    expect_labels("signals", signals);
    const auto n = static_cast<Eigen::Index>(behaviors.size());
    std::vector<Matrix> ms;
    for (SignalId h = 0; h < signals.size(); ++h) {
        std::string word;
        std::string label;
        if (!(in >> word >> label) || word != "signal" || label != signals.label(h)) {
            throw InputError("model file: expected 'signal " + signals.label(h) + "'");
        }
        Matrix m(n, n);
        for (Eigen::Index b = 0; b < n; ++b) {
            for (Eigen::Index c = 0; c < n; ++c) {
                if (!(in >> m(b, c))) throw InputError("model file: truncated matrix for " + label);
            }
        }
        ms.push_back(std::move(m));
    }
    return BehaviorModel(behaviors.size(), std::move(ms));
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns)
    : out_(open_output(path)), columns_(columns.size()) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    out_ << "# created " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
}

CsvWriter& CsvWriter::operator<<(const std::string& cell) {
    row_.push_back(cell);
    return *this;
}

void CsvWriter::end_row() {
    if (row_.size() != columns_) {
        throw InputError("CSV row has " + std::to_string(row_.size()) + " cells, expected " +
                         std::to_string(columns_));
    }
    for (std::size_t i = 0; i < row_.size(); ++i) out_ << (i ? "," : "") << row_[i];
    out_ << '\n';
    row_.clear();
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) throw InputError("failed to write CSV output");
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        line = chomp(line);
        if (line.empty() || line.front() == '#') continue;
        if (!have_header) {
            table.header = split(line, ',');
            have_header = true;
        } else {
            table.rows.push_back(split(line, ','));
        }
    }
    return table;
}

}  // namespace gtml::io
