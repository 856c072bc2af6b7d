// Copyright 2026 The HCEP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hcep/plot.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hcep/errors.hpp"
#include "hcep/manifest.hpp"

namespace hcep {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 360;
constexpr int kMargin = 48;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_open(const std::string& title) {
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n"
    << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin
    << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
    << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  return o.str();
}

std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<double>& values) {
  std::ostringstream o;
  o << svg_open(title);
  const double top = values.empty() ? 1.0 : std::max(1e-12, *std::max_element(values.begin(), values.end()));
  const double plot_w = kWidth - 2.0 * kMargin, plot_h = kHeight - 2.0 * kMargin;
  const double slot = values.empty() ? plot_w : plot_w / static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double bh = plot_h * std::max(0.0, values[i]) / top;
    const double x = kMargin + slot * static_cast<double>(i) + slot * 0.15;
    o << "<rect x=\"" << x << "\" y=\"" << kHeight - kMargin - bh << "\" width=\"" << slot * 0.7
      << "\" height=\"" << bh << "\" fill=\"#4c72b0\"/>\n"
      << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << kHeight - kMargin + 14
      << "\" text-anchor=\"middle\">" << escape(labels[i]) << "</text>\n"
      << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << kHeight - kMargin - bh - 4
      << "\" text-anchor=\"middle\">" << std::fixed << std::setprecision(3) << values[i]
      << std::defaultfloat << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string csv_number(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

Figure node_figure(const nlohmann::json& eval_report, const std::string& key, const std::string& name,
                   const std::string& title) {
  Figure f{name, "column,name," + key + "\n", ""};
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& n : eval_report.at("nodes")) {
    const std::string col = n.at("column").get<std::string>();
    const double v = n.at(key).get<double>();
    f.csv += col + "," + n.at("name").get<std::string>() + "," + csv_number(v) + "\n";
    labels.push_back(col);
    values.push_back(v);
  }
  f.svg = bar_chart(title, labels, values);
  return f;
}

}  // namespace

Figure confidence_figure(const nlohmann::json& evolve_report) {
  Figure f{"confidence_evolution", "iteration,high_conf_fraction,mean_conf_selected,heldout_child_dice", ""};
  for (int b = 0; b < 10; ++b) f.csv += ",bin_" + std::to_string(b);
  f.csv += "\n";
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& it : evolve_report.at("iterations")) {
    const int k = it.at("iteration").get<int>();
    const double hc = it.at("high_conf_fraction").get<double>();
    f.csv += std::to_string(k) + "," + csv_number(hc) + "," + csv_number(it.at("mean_conf_selected").get<double>()) +
             "," + csv_number(it.at("heldout_child_dice").get<double>());
    for (const auto& b : it.at("confidence_histogram")) f.csv += "," + csv_number(b.get<double>());
    f.csv += "\n";
    labels.push_back("iter " + std::to_string(k));
    values.push_back(hc);
  }
  f.svg = bar_chart("High-confidence pseudo-label share per iteration", labels, values);
  return f;
}

Figure category_dice_figure(const nlohmann::json& eval_report) {
  return node_figure(eval_report, "dice", "category_dice", "Dice per concept");
}

Figure hausdorff_figure(const nlohmann::json& eval_report) {
  return node_figure(eval_report, "hd", "hausdorff", "Hausdorff distance per concept (pixels)");
}

std::vector<std::filesystem::path> write_figures(const std::filesystem::path& run_dir) {
  auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot read " + p.string());
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
      throw IoError(p.string() + " is not valid JSON: " + ex.what());
    }
  };
  const auto evolve_path = run_dir / "evolve_report.json";
  if (!std::filesystem::exists(evolve_path))
    throw MissingInputError("no evolution report in " + run_dir.string());
  std::vector<Figure> figs;
  try {
    figs.push_back(confidence_figure(read(evolve_path)));
    const auto eval_path = run_dir / "eval_report.json";
    if (std::filesystem::exists(eval_path)) {
      const auto ev = read(eval_path);
      figs.push_back(category_dice_figure(ev));
      figs.push_back(hausdorff_figure(ev));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("malformed report: ") + ex.what());
  }
  const auto out = run_dir / "figures";
  std::filesystem::create_directories(out);
  std::vector<std::filesystem::path> written;
  for (const auto& f : figs) {
    atomic_write(out / (f.name + ".csv"), f.csv);
    atomic_write(out / (f.name + ".svg"), f.svg);
    written.push_back(out / (f.name + ".csv"));
    written.push_back(out / (f.name + ".svg"));
  }
  return written;
}

}  // namespace hcep
