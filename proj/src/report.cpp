// SPDX-License-Identifier: Apache-2.0
//
// beamadv: adversarial robustness laboratory for mmWave beam prediction
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "beamadv/error.hpp"
#include "beamadv/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace beamadv
{

using json = nlohmann::json;

namespace
{

constexpr int report_schema_version = 1;

json correlation_to_json(const std::optional<CorrelationResult> &c)
{
    if (!c)
        return nullptr;
    return json{{"r", c->r}, {"p", c->p}, {"n", c->n}};
}

std::optional<CorrelationResult> correlation_from_json(const json &j)
{
    if (j.is_null())
        return std::nullopt;
    CorrelationResult c;
    c.r = j.at("r").get<double>();
    c.p = j.at("p").get<double>();
    c.n = j.at("n").get<std::size_t>();
    return c;
}

std::string csv_field(const std::string &s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

void write_file(const std::filesystem::path &path, const std::string &content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write '" + path.string() + "'");
    out << content;
    out.close();
    require(static_cast<bool>(out), ErrorCode::io, "failed while writing '" + path.string() + "'");
}

std::vector<std::string> defense_order(const EvalReport &report)
{
    std::vector<std::string> out;
    for (const char *d : {undefended_name, "adversarial_training", "distillation"})
        if (std::any_of(report.cells.begin(), report.cells.end(), [&](const ReportCell &c) { return c.defense == d; }))
            out.push_back(d);
    return out;
}

// ---- svg -------------------------------------------------------------------

struct Series
{
    std::string name;
    std::vector<double> xs;
    std::vector<double> ys;
};

std::string escape(const std::string &s)
{
    std::string out;
    for (char c : s)
    {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

std::string num(double v, const char *f = "%.2f")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const char *palette[] = {"#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6c4f9c", "#00798c"};

constexpr double svg_w = 680, svg_h = 420, left = 80, right = 170, top = 50, bottom = 60;

struct Frame
{
    double x0, x1, y0, y1;
    double px(double x) const { return left + (x - x0) / (x1 - x0) * (svg_w - left - right); }
    double py(double y) const { return svg_h - bottom - (y - y0) / (y1 - y0) * (svg_h - top - bottom); }
};

std::string svg_open(const std::string &title, const std::string &xlabel, const std::string &ylabel)
{
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_w << "\" height=\"" << svg_h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(svg_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
    o << "<text x=\"" << num(left + (svg_w - left - right) / 2) << "\" y=\"" << num(svg_h - 15)
      << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
    o << "<text x=\"18\" y=\"" << num(top + (svg_h - top - bottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << num(top + (svg_h - top - bottom) / 2) << ")\">" << escape(ylabel) << "</text>\n";
    return o.str();
}

std::string axes(const Frame &f)
{
    std::ostringstream o;
    o << "<g stroke=\"#333\" fill=\"none\">\n";
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(svg_h - bottom) << "\" x2=\"" << num(svg_w - right)
      << "\" y2=\"" << num(svg_h - bottom) << "\"/>\n";
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
      << num(svg_h - bottom) << "\"/>\n";
    o << "</g>\n";
    for (int i = 0; i <= 5; ++i)
    {
        const double xv = f.x0 + (f.x1 - f.x0) * i / 5.0;
        const double yv = f.y0 + (f.y1 - f.y0) * i / 5.0;
        o << "<line x1=\"" << num(f.px(xv)) << "\" y1=\"" << num(svg_h - bottom) << "\" x2=\"" << num(f.px(xv))
          << "\" y2=\"" << num(svg_h - bottom + 5) << "\" stroke=\"#333\"/>\n";
        o << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(svg_h - bottom + 18) << "\" text-anchor=\"middle\">"
          << num(xv, "%.3g") << "</text>\n";
        o << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(f.py(yv)) << "\" x2=\"" << num(svg_w - right)
          << "\" y2=\"" << num(f.py(yv)) << "\" stroke=\"#ddd\"/>\n";
        o << "<text x=\"" << num(left - 8) << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">"
          << num(yv, "%.3g") << "</text>\n";
    }
    return o.str();
}

std::string line_chart(const std::string &title, const std::string &xlabel, const std::string &ylabel,
                       const std::vector<Series> &series)
{
    Frame f{0, 1, 0, 1};
    bool first = true;
    for (const auto &s : series)
        for (std::size_t i = 0; i < s.xs.size(); ++i)
        {
            if (first)
            {
                f = {s.xs[i], s.xs[i], std::min(0.0, s.ys[i]), s.ys[i]};
                first = false;
            }
            f.x0 = std::min(f.x0, s.xs[i]);
            f.x1 = std::max(f.x1, s.xs[i]);
            f.y0 = std::min(f.y0, s.ys[i]);
            f.y1 = std::max(f.y1, s.ys[i]);
        }
    if (f.x1 <= f.x0)
        f.x1 = f.x0 + 1.0;
    if (f.y1 <= f.y0)
        f.y1 = f.y0 + 1.0;
    f.y1 += 0.05 * (f.y1 - f.y0);

    std::ostringstream o;
    o << svg_open(title, xlabel, ylabel) << axes(f);
    for (std::size_t k = 0; k < series.size(); ++k)
    {
        const auto &s = series[k];
        const char *color = palette[k % std::size(palette)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.xs.size(); ++i)
            o << (i ? " " : "") << num(f.px(s.xs[i])) << "," << num(f.py(s.ys[i]));
        o << "\"/>\n";
        for (std::size_t i = 0; i < s.xs.size(); ++i)
            o << "<circle cx=\"" << num(f.px(s.xs[i])) << "\" cy=\"" << num(f.py(s.ys[i])) << "\" r=\"3\" fill=\""
              << color << "\"/>\n";
        const double ly = top + 10 + 20.0 * static_cast<double>(k);
        o << "<line x1=\"" << num(svg_w - right + 15) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(svg_w - right + 40)
          << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << num(svg_w - right + 46) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string histogram_chart(const std::string &title, const Histogram &h)
{
    Frame f{h.bin_edges.front(), h.bin_edges.back(), 0.0, 1.0};
    for (auto c : h.counts)
        f.y1 = std::max(f.y1, static_cast<double>(c));
    f.y1 *= 1.05;
    std::ostringstream o;
    o << svg_open(title, "per-sample MSE", "samples") << axes(f);
    for (std::size_t i = 0; i < h.counts.size(); ++i)
    {
        const double x0 = f.px(h.bin_edges[i]);
        const double x1 = f.px(h.bin_edges[i + 1]);
        const double y = f.py(static_cast<double>(h.counts[i]));
        o << "<rect x=\"" << num(x0) << "\" y=\"" << num(y) << "\" width=\"" << num(std::max(0.0, x1 - x0 - 1))
          << "\" height=\"" << num(svg_h - bottom - y) << "\" fill=\"" << palette[0] << "\"/>\n";
    }
    o << "<text x=\"" << num(svg_w - right + 15) << "\" y=\"" << num(top + 14) << "\">n = " << h.n << "</text>\n";
    o << "<text x=\"" << num(svg_w - right + 15) << "\" y=\"" << num(top + 34) << "\">mean = " << num(h.mean, "%.4g")
      << "</text>\n";
    o << "<text x=\"" << num(svg_w - right + 15) << "\" y=\"" << num(top + 54) << "\">std = " << num(h.std, "%.4g")
      << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

std::string safe_name(const std::string &s)
{
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') ? c : '_';
    return out;
}

std::vector<std::string> scenario_order(const EvalReport &report)
{
    std::vector<std::string> out;
    for (const auto &c : report.cells)
        if (std::find(out.begin(), out.end(), c.scenario) == out.end())
            out.push_back(c.scenario);
    return out;
}

std::vector<AttackKind> attack_order(const EvalReport &report)
{
    std::vector<AttackKind> out;
    for (AttackKind k : all_attacks())
        if (std::any_of(report.cells.begin(), report.cells.end(), [&](const ReportCell &c) { return c.attack == k; }))
            out.push_back(k);
    return out;
}

Series series_for(const EvalReport &report, const std::string &scenario, AttackKind k, const std::string &defense,
                  const std::string &name)
{
    Series s{name, {}, {}};
    for (const auto &c : report.cells)
        if (c.scenario == scenario && c.attack == k && c.defense == defense)
        {
            s.xs.push_back(c.epsilon);
            s.ys.push_back(c.mean_mse);
        }
    return s;
}

std::string utc_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

// ---- json ------------------------------------------------------------------

std::string report_to_json(const EvalReport &report)
{
    json j;
    j["schema_version"] = report_schema_version;
    j["study"] = report.study;
    const Provenance &p = report.provenance;
    j["provenance"] = {{"config_hash", p.config_hash},
                       {"master_seed", p.master_seed},
                       {"data_seeds", p.data_seeds},
                       {"config", p.config_text},
                       {"filter", p.filter}};
    json models = json::array();
    for (const auto &m : report.models)
        models.push_back({{"scenario", m.scenario},
                          {"defense", m.defense},
                          {"clean_mse", m.clean_mse},
                          {"n", m.n},
                          {"labels", m.labels},
                          {"model_seed", m.model_seed}});
    j["models"] = models;
    json cells = json::array();
    for (const auto &c : report.cells)
        cells.push_back({{"scenario", c.scenario},
                         {"attack", to_string(c.attack)},
                         {"epsilon", c.epsilon},
                         {"defense", c.defense},
                         {"mean_mse", c.mean_mse},
                         {"n", c.n},
                         {"labels", c.labels},
                         {"model_seed", c.model_seed},
                         {"attack_seed", c.attack_seed},
                         {"histogram",
                          {{"bin_edges", c.histogram.bin_edges},
                           {"counts", c.histogram.counts},
                           {"n", c.histogram.n},
                           {"mean", c.histogram.mean},
                           {"std", c.histogram.std}}}});
    j["cells"] = cells;
    json corr = json::array();
    for (const auto &c : report.correlations)
        corr.push_back({{"scenario", c.scenario},
                        {"attack", to_string(c.attack)},
                        {"grid", correlation_to_json(c.grid)},
                        {"pooled", correlation_to_json(c.pooled)},
                        {"error", c.error}});
    j["correlations"] = corr;
    return j.dump(1) + "\n";
}

EvalReport report_from_json(const std::string &text)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::exception &e)
    {
        throw ParseError(std::string("report is not valid JSON: ") + e.what());
    }
    try
    {
        if (!j.is_object() || !j.contains("schema_version"))
            throw ParseError("report has no schema_version");
        const int version = j.at("schema_version").get<int>();
        if (version != report_schema_version)
            fail(ErrorCode::unsupported, "report schema version " + std::to_string(version) +
                                             " is not supported (expected " +
                                             std::to_string(report_schema_version) + ")");
        EvalReport r;
        r.study = j.at("study").get<std::string>();
        const json &p = j.at("provenance");
        r.provenance.config_hash = p.at("config_hash").get<std::string>();
        r.provenance.master_seed = p.at("master_seed").get<std::uint64_t>();
        r.provenance.data_seeds = p.at("data_seeds").get<std::map<std::string, std::uint64_t>>();
        r.provenance.config_text = p.at("config").get<std::string>();
        r.provenance.filter = p.at("filter").get<std::string>();
        for (const json &m : j.at("models"))
        {
            ModelSummary s;
            s.scenario = m.at("scenario").get<std::string>();
            s.defense = m.at("defense").get<std::string>();
            s.clean_mse = m.at("clean_mse").get<double>();
            s.n = m.at("n").get<std::size_t>();
            s.labels = m.at("labels").get<std::string>();
            s.model_seed = m.at("model_seed").get<std::uint64_t>();
            r.models.push_back(s);
        }
        for (const json &c : j.at("cells"))
        {
            ReportCell cell;
            cell.scenario = c.at("scenario").get<std::string>();
            cell.attack = attack_from_string(c.at("attack").get<std::string>());
            cell.epsilon = c.at("epsilon").get<double>();
            cell.defense = c.at("defense").get<std::string>();
            cell.mean_mse = c.at("mean_mse").get<double>();
            cell.n = c.at("n").get<std::size_t>();
            cell.labels = c.at("labels").get<std::string>();
            cell.model_seed = c.at("model_seed").get<std::uint64_t>();
            cell.attack_seed = c.at("attack_seed").get<std::uint64_t>();
            const json &h = c.at("histogram");
            cell.histogram.bin_edges = h.at("bin_edges").get<std::vector<double>>();
            cell.histogram.counts = h.at("counts").get<std::vector<std::size_t>>();
            cell.histogram.n = h.at("n").get<std::size_t>();
            cell.histogram.mean = h.at("mean").get<double>();
            cell.histogram.std = h.at("std").get<double>();
            if (cell.histogram.bin_edges.size() != cell.histogram.counts.size() + 1)
                throw ParseError("histogram edges and counts disagree");
            r.cells.push_back(std::move(cell));
        }
        for (const json &c : j.at("correlations"))
        {
            CorrelationRow row;
            row.scenario = c.at("scenario").get<std::string>();
            row.attack = attack_from_string(c.at("attack").get<std::string>());
            row.grid = correlation_from_json(c.at("grid"));
            row.pooled = correlation_from_json(c.at("pooled"));
            row.error = c.at("error").get<std::string>();
            r.correlations.push_back(std::move(row));
        }
        return r;
    }
    catch (const json::exception &e)
    {
        throw ParseError(std::string("report is malformed: ") + e.what());
    }
    catch (const Error &e)
    {
        if (e.code() == ErrorCode::unsupported || e.code() == ErrorCode::parse)
            throw;
        throw ParseError(std::string("report is malformed: ") + e.what());
    }
}

EvalReport load_report(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open report '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return report_from_json(ss.str());
}

// ---- csv -------------------------------------------------------------------

std::string mse_table_csv(const EvalReport &report)
{
    const auto defenses = defense_order(report);
    std::ostringstream o;
    o << "scenario,attack,epsilon";
    for (const auto &d : defenses)
        o << "," << d;
    o << "\n";
    std::vector<std::tuple<std::string, AttackKind, double>> keys;
    std::map<std::tuple<std::string, AttackKind, double>, std::map<std::string, double>> values;
    for (const auto &c : report.cells)
    {
        auto key = std::make_tuple(c.scenario, c.attack, c.epsilon);
        if (!values.contains(key))
            keys.push_back(key);
        values[key][c.defense] = c.mean_mse;
    }
    const auto scenarios = scenario_order(report);
    auto rank = [&](const std::string &s) { return std::find(scenarios.begin(), scenarios.end(), s) - scenarios.begin(); };
    std::stable_sort(keys.begin(), keys.end(), [&](const auto &a, const auto &b) {
        return std::make_tuple(rank(std::get<0>(a)), static_cast<int>(std::get<1>(a)), std::get<2>(a)) <
               std::make_tuple(rank(std::get<0>(b)), static_cast<int>(std::get<1>(b)), std::get<2>(b));
    });
    for (const auto &key : keys)
    {
        o << csv_field(std::get<0>(key)) << "," << to_string(std::get<1>(key)) << "," << format_double(std::get<2>(key));
        const auto &row = values[key];
        for (const auto &d : defenses)
        {
            o << ",";
            if (auto it = row.find(d); it != row.end())
                o << format_double(it->second);
        }
        o << "\n";
    }
    return o.str();
}

std::string mse_cells_csv(const EvalReport &report)
{
    std::ostringstream o;
    o << "scenario,attack,epsilon,defense,mean_mse,n,labels,model_seed,attack_seed\n";
    for (const auto &c : report.cells)
        o << csv_field(c.scenario) << "," << to_string(c.attack) << "," << format_double(c.epsilon) << ","
          << c.defense << "," << format_double(c.mean_mse) << "," << c.n << "," << c.labels << "," << c.model_seed
          << "," << c.attack_seed << "\n";
    return o.str();
}

std::string correlation_csv(const EvalReport &report)
{
    std::ostringstream o;
    o << "scenario,attack,r,p,n,pooled_r,pooled_p,pooled_n,status\n";
    auto part = [&](const std::optional<CorrelationResult> &c) {
        if (c)
            o << format_double(c->r) << "," << format_double(c->p) << "," << c->n;
        else
            o << ",,";
    };
    for (const auto &c : report.correlations)
    {
        o << csv_field(c.scenario) << "," << to_string(c.attack) << ",";
        part(c.grid);
        o << ",";
        part(c.pooled);
        o << "," << csv_field(c.error.empty() ? "ok" : c.error) << "\n";
    }
    return o.str();
}

std::string models_csv(const EvalReport &report)
{
    std::ostringstream o;
    o << "scenario,defense,clean_mse,n,labels,model_seed\n";
    for (const auto &m : report.models)
        o << csv_field(m.scenario) << "," << m.defense << "," << format_double(m.clean_mse) << "," << m.n << ","
          << m.labels << "," << m.model_seed << "\n";
    return o.str();
}

// ---- emission --------------------------------------------------------------

std::vector<std::string> emit_report(const EvalReport &report, const std::filesystem::path &dir,
                                     const EmitOptions &options)
{
    require(!report.cells.empty() || !report.models.empty(), ErrorCode::invalid_argument,
            "refusing to emit an empty report");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec && std::filesystem::is_directory(dir), ErrorCode::io,
            "cannot create output directory '" + dir.string() + "'");

    std::vector<std::pair<std::string, std::string>> files{
        {"report.json", report_to_json(report)},
        {"mse_table.csv", mse_table_csv(report)},
        {"mse_cells.csv", mse_cells_csv(report)},
        {"models.csv", models_csv(report)},
        {"correlation.csv", correlation_csv(report)},
    };

    if (options.svg)
    {
        const auto defenses = defense_order(report);
        for (const auto &scenario : scenario_order(report))
        {
            if (report.study == "rq3")
            {
                for (AttackKind k : attack_order(report))
                {
                    std::vector<Series> series;
                    for (const auto &d : defenses)
                        series.push_back(series_for(report, scenario, k, d, d));
                    files.emplace_back(safe_name("mitigation_" + scenario + "_" + to_string(k) + ".svg"),
                                       line_chart(scenario + ": " + to_string(k) + " against each model", "epsilon",
                                                  "mean test MSE", series));
                }
            }
            else
            {
                std::vector<Series> series;
                for (AttackKind k : attack_order(report))
                    series.push_back(series_for(report, scenario, k, undefended_name, to_string(k)));
                files.emplace_back(safe_name("mse_vs_epsilon_" + scenario + ".svg"),
                                   line_chart(scenario + ": MSE under attack", "epsilon", "mean test MSE", series));
            }
        }
        if (report.study == "rq2")
            for (const auto &c : report.cells)
                files.emplace_back(safe_name("hist_" + c.scenario + "_" + to_string(c.attack) + "_eps" +
                                             format_double(c.epsilon) + ".svg"),
                                   histogram_chart(c.scenario + ": " + to_string(c.attack) + ", epsilon " +
                                                       format_double(c.epsilon),
                                                   c.histogram));
    }

    std::vector<std::string> names;
    for (const auto &[name, content] : files)
    {
        write_file(dir / name, content);
        names.push_back(name);
    }

    json sidecar;
    sidecar["written_at_utc"] = utc_now();
    sidecar["study"] = report.study;
    sidecar["files"] = names;
    if (!options.sidecar_extra.empty())
    {
        try
        {
            const json extra = json::parse(options.sidecar_extra);
            if (!extra.is_object())
                fail(ErrorCode::invalid_argument, "sidecar extra is not a JSON object");
            for (auto &[k, v] : extra.items())
                sidecar[k] = v;
        }
        catch (const json::exception &e)
        {
            fail(ErrorCode::invalid_argument, std::string("sidecar extra is not a JSON object: ") + e.what());
        }
    }
    write_file(dir / "timestamps.json", sidecar.dump(1) + "\n");
    names.push_back("timestamps.json");
    return names;
}

} // namespace beamadv
