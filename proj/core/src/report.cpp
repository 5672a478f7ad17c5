#include "metatask/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "metatask/errors.hpp"

namespace metatask {

namespace {
constexpr const char* kHeader = "algo,train_regime,p_hard,mean_acc,ci_low,ci_high,n_tasks";
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
    if (report.rows.empty()) throw ValidationError("write_report_csv: report is empty");
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write report '" + path.string() + "'");
    out << kHeader << '\n';
    out << std::fixed << std::setprecision(6);
    for (const EvalRow& r : report.rows) {
        out << r.algo << ',' << r.train_regime << ',' << r.p_hard << ',' << r.mean_acc << ','
            << r.ci_low << ',' << r.ci_high << ',' << r.n_tasks << '\n';
    }
}

EvalReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open report '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != kHeader) {
        throw ValidationError("report '" + path.string() + "' has an unexpected header");
    }
    EvalReport report;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        EvalRow row;
        std::string field;
        try {
            std::getline(ss, row.algo, ',');
            std::getline(ss, row.train_regime, ',');
            std::getline(ss, field, ',');
            row.p_hard = std::stod(field);
            std::getline(ss, field, ',');
            row.mean_acc = std::stod(field);
            std::getline(ss, field, ',');
            row.ci_low = std::stod(field);
            std::getline(ss, field, ',');
            row.ci_high = std::stod(field);
            std::getline(ss, field, ',');
            row.n_tasks = static_cast<std::size_t>(std::stoull(field));
        } catch (const std::logic_error&) {
            throw ValidationError("malformed report row at " + path.filename().string() + ":" +
                                  std::to_string(line_no));
        }
        report.rows.push_back(std::move(row));
    }
    if (report.rows.empty()) throw ValidationError("report '" + path.string() + "' has no rows");
    return report;
}

namespace {

struct Series {
    std::string key;
    std::string color;
    bool dashed = false;
    std::vector<const EvalRow*> points;  // sorted by p_hard
};

std::string regime_color(const std::string& regime) {
    if (regime == "random") return "#d62728";
    if (regime == "hard") return "#1f77b4";
    if (regime == "mixed") return "#2ca02c";
    return "#7f7f7f";
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(2) << v;
    return ss.str();
}

}  // namespace

void write_report_svg(const EvalReport& report, const std::filesystem::path& path,
                      const std::optional<std::string>& comment) {
    if (report.rows.empty()) throw ValidationError("write_report_svg: report is empty");

    std::map<std::string, Series> series;
    for (const EvalRow& r : report.rows) {
        const std::string key = r.algo + " / " + r.train_regime;
        Series& s = series[key];
        s.key = key;
        s.color = regime_color(r.train_regime);
        s.dashed = r.algo != "maml";
        s.points.push_back(&r);
    }
    for (auto& [key, s] : series) {
        std::sort(s.points.begin(), s.points.end(),
                  [](const EvalRow* a, const EvalRow* b) { return a->p_hard < b->p_hard; });
    }

    constexpr double width = 840, height = 560;
    constexpr double ml = 70, mr = 210, mt = 40, mb = 60;
    const double plot_w = width - ml - mr;
    const double plot_h = height - mt - mb;
    const auto sx = [&](double p) { return ml + p * plot_w; };
    const auto sy = [&](double acc) { return mt + (1.0 - acc) * plot_h; };

    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write plot '" + path.string() + "'");
    out << std::fixed << std::setprecision(2);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    if (comment) out << "<!-- " << *comment << " -->\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    // grid + ticks
    for (int i = 0; i <= 10; ++i) {
        const double p = i / 10.0;
        out << "<line x1=\"" << sx(p) << "\" y1=\"" << mt << "\" x2=\"" << sx(p) << "\" y2=\""
            << mt + plot_h << "\" stroke=\"#eeeeee\"/>\n";
        out << "<text x=\"" << sx(p) << "\" y=\"" << mt + plot_h + 20
            << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">" << fmt(p)
            << "</text>\n";
        out << "<line x1=\"" << ml << "\" y1=\"" << sy(p) << "\" x2=\"" << ml + plot_w
            << "\" y2=\"" << sy(p) << "\" stroke=\"#eeeeee\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << sy(p) + 4
            << "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">" << fmt(p)
            << "</text>\n";
    }
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << plot_w << "\" height=\""
        << plot_h << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 15
        << "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\">"
        << "hard-task probability</text>\n";
    out << "<text x=\"18\" y=\"" << mt + plot_h / 2
        << "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "transform=\"rotate(-90 18 " << mt + plot_h / 2 << ")\">mean accuracy</text>\n";

    // CI bands then curves
    for (const auto& [key, s] : series) {
        out << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.12\" stroke=\"none\" points=\"";
        for (const EvalRow* p : s.points) out << sx(p->p_hard) << ',' << sy(p->ci_high) << ' ';
        for (auto it = s.points.rbegin(); it != s.points.rend(); ++it) {
            out << sx((*it)->p_hard) << ',' << sy((*it)->ci_low) << ' ';
        }
        out << "\"/>\n";
    }
    for (const auto& [key, s] : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
        if (s.dashed) out << " stroke-dasharray=\"6 4\"";
        out << " points=\"";
        for (const EvalRow* p : s.points) out << sx(p->p_hard) << ',' << sy(p->mean_acc) << ' ';
        out << "\"/>\n";
        for (const EvalRow* p : s.points) {
            out << "<circle cx=\"" << sx(p->p_hard) << "\" cy=\"" << sy(p->mean_acc)
                << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
        }
    }

    // legend
    double ly = mt + 10;
    for (const auto& [key, s] : series) {
        out << "<line x1=\"" << ml + plot_w + 15 << "\" y1=\"" << ly << "\" x2=\""
            << ml + plot_w + 45 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        out << "<text x=\"" << ml + plot_w + 52 << "\" y=\"" << ly + 4
            << "\" font-size=\"12\" font-family=\"sans-serif\">" << key << "</text>\n";
        ly += 20;
    }
    out << "</svg>\n";
}

}  // namespace metatask
