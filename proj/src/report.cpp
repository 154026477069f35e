#include "dvars/report.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "dvars/error.hpp"
#include "json.hpp"

namespace dvars {

namespace {

using Json = nlohmann::ordered_json;

std::string format_value(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> number_or_null(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

Json summary_entry(const std::optional<VariantSummary>& s) {
    if (!s) return nullptr;
    return Json{{"mean", s->mean}, {"median", s->median}};
}

std::optional<VariantSummary> summary_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return VariantSummary{j.at("mean").get<double>(), j.at("median").get<double>()};
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
    if (text == "tsv") return ReportFormat::Tsv;
    if (text == "json") return ReportFormat::Json;
    throw InvalidInput("unknown report format \"" + std::string(text) + "\" (expected tsv or json)");
}

std::string report_to_tsv(const QcReport& r) {
    std::string out = "frame\tdvars\tdvars_star\tdvars_star_star\tflag\n";
    for (const auto& f : r.frames) {
        out += std::to_string(f.frame);
        out += '\t';
        out += format_value(f.dvars);
        out += '\t';
        out += format_value(f.dvars_star);
        out += '\t';
        out += format_value(f.dvars_star_star);
        out += '\t';
        out += f.flag ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string report_to_json(const QcReport& r) {
    const auto& m = r.meta;
    Json meta{
        {"tool", m.tool},
        {"version", m.version},
        {"input", m.input},
        {"mask", m.mask},
        {"estimator",
         {{"sigma", m.robust_sigma ? "iqr/1.349" : "sample-sd"},
          {"rho", m.rho_estimator},
          {"detrend", m.detrend},
          {"params", m.params_source}}},
        {"flag_policy", m.flag_policy},
        {"I", m.voxels},
        {"I_effective", m.effective_voxels},
        {"T", m.frames},
        {"warnings", m.warnings},
        {"assumptions", m.assumptions},
    };
    const auto& s = r.summary;
    Json summary{
        {"dvars", summary_entry(s.dvars)},
        {"dvars_star", summary_entry(s.dvars_star)},
        {"dvars_star_star", summary_entry(s.dvars_star_star)},
        {"flagged_frames", s.flagged_frames},
        {"excluded_degenerate", s.excluded_degenerate},
        {"excluded_star_star", s.excluded_star_star},
    };
    Json frames = Json::array();
    for (const auto& f : r.frames) {
        frames.push_back(Json{
            {"frame", f.frame},
            {"dvars", optional_number(f.dvars)},
            {"dvars_star", optional_number(f.dvars_star)},
            {"dvars_star_star", optional_number(f.dvars_star_star)},
            {"flag", f.flag},
        });
    }
    Json doc{{"meta", std::move(meta)}, {"summary", std::move(summary)}, {"frames", std::move(frames)}};
    return doc.dump(2) + "\n";
}

QcReport report_from_json(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InvalidInput(std::string("report JSON does not parse: ") + e.what());
    }
    QcReport r;
    try {
        const auto& m = doc.at("meta");
        r.meta.tool = m.at("tool").get<std::string>();
        r.meta.version = m.at("version").get<std::string>();
        r.meta.input = m.at("input").get<std::string>();
        r.meta.mask = m.at("mask").get<std::string>();
        const auto& e = m.at("estimator");
        r.meta.robust_sigma = e.at("sigma").get<std::string>() == "iqr/1.349";
        r.meta.rho_estimator = e.at("rho").get<std::string>();
        r.meta.detrend = e.at("detrend").get<bool>();
        r.meta.params_source = e.at("params").get<std::string>();
        r.meta.flag_policy = m.at("flag_policy").get<std::string>();
        r.meta.voxels = m.at("I").get<std::size_t>();
        r.meta.effective_voxels = m.at("I_effective").get<std::size_t>();
        r.meta.frames = m.at("T").get<std::size_t>();
        r.meta.warnings = m.at("warnings").get<std::vector<std::string>>();
        r.meta.assumptions = m.at("assumptions").get<std::vector<std::string>>();

        const auto& s = doc.at("summary");
        r.summary.dvars = summary_from(s.at("dvars"));
        r.summary.dvars_star = summary_from(s.at("dvars_star"));
        r.summary.dvars_star_star = summary_from(s.at("dvars_star_star"));
        r.summary.flagged_frames = s.at("flagged_frames").get<std::size_t>();
        r.summary.excluded_degenerate = s.at("excluded_degenerate").get<std::size_t>();
        r.summary.excluded_star_star = s.at("excluded_star_star").get<std::size_t>();

        for (const auto& f : doc.at("frames")) {
            FrameRecord rec;
            rec.frame = f.at("frame").get<std::size_t>();
            rec.dvars = number_or_null(f.at("dvars"));
            rec.dvars_star = number_or_null(f.at("dvars_star"));
            rec.dvars_star_star = number_or_null(f.at("dvars_star_star"));
            rec.flag = f.at("flag").get<std::uint8_t>();
            r.frames.push_back(rec);
        }
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("report JSON is missing fields: ") + e.what());
    }
    return r;
}

void write_report(const QcReport& r, const std::filesystem::path& path, ReportFormat format) {
    const std::string text = format == ReportFormat::Json ? report_to_json(r) : report_to_tsv(r);
    if (path == "-") {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report to " + path.string());
    out << text;
    out.close();
    if (!out) throw IoError("error while writing report to " + path.string());
}

}  // namespace dvars
