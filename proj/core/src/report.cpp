#include "rhythm/report.h"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rhythm {

using ordered_json = nlohmann::ordered_json;

const Stat* ReportRow::metric(std::string_view name) const {
    for (const auto& [key, stat] : metrics) {
        if (key == name) {
            return &stat;
        }
    }
    return nullptr;
}

std::string ReportRow::label(std::string_view key) const {
    for (const auto& [k, v] : labels) {
        if (k == key) {
            return v;
        }
    }
    return {};
}

std::vector<const ReportRow*> MetricsReport::select(
    const std::vector<std::pair<std::string, std::string>>& filter) const {
    std::vector<const ReportRow*> out;
    for (const auto& row : rows) {
        bool match = true;
        for (const auto& [k, v] : filter) {
            match = match && row.label(k) == v;
        }
        if (match) {
            out.push_back(&row);
        }
    }
    return out;
}

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string to_jsonl(const MetricsReport& report) {
    std::string out;
    for (const auto& row : report.rows) {
        ordered_json labels = ordered_json::object();
        for (const auto& [k, v] : row.labels) {
            labels[k] = v;
        }
        for (const auto& [name, stat] : row.metrics) {
            ordered_json line;
            line["experiment"] = report.experiment;
            line["labels"] = labels;
            line["metric"] = name;
            line["mean"] = stat.mean;
            line["sd"] = stat.sd;
            line["n"] = stat.n;
            out += line.dump();
            out += '\n';
        }
    }
    return out;
}

MetricsReport from_jsonl(std::string_view text) {
    MetricsReport report;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = ordered_json::parse(line);
            std::vector<std::pair<std::string, std::string>> labels;
            for (const auto& [k, v] : j.at("labels").items()) {
                labels.emplace_back(k, v.get<std::string>());
            }
            Stat stat{j.at("mean").get<double>(), j.at("sd").get<double>(), j.at("n").get<std::size_t>()};
            if (report.rows.empty()) {
                report.experiment = j.at("experiment").get<std::string>();
            }
            if (report.rows.empty() || report.rows.back().labels != labels) {
                report.rows.push_back({std::move(labels), {}});
            }
            report.rows.back().metrics.emplace_back(j.at("metric").get<std::string>(), stat);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("report line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return report;
}

std::string to_table(const MetricsReport& report) {
    std::ostringstream out;
    out << "experiment\tlabels\tmetric\tmean\tsd\tn\n";
    for (const auto& row : report.rows) {
        std::string labels;
        for (const auto& [k, v] : row.labels) {
            if (!labels.empty()) {
                labels += ',';
            }
            labels += k + '=' + v;
        }
        for (const auto& [name, stat] : row.metrics) {
            out << report.experiment << '\t' << labels << '\t' << name << '\t' << format_number(stat.mean) << '\t'
                << format_number(stat.sd) << '\t' << stat.n << '\n';
        }
    }
    return out.str();
}

}  // namespace rhythm
