#include "hpsbl/plot.hpp"
#include "hpsbl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

namespace hpsbl {

namespace {

const char *const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                               "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

std::string fmt(const char *f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double to_number(const std::string &s) {
  char *end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  return end == s.c_str() ? std::nan("") : x;
}

std::string xml_comment(std::string s) {
  for (std::size_t i; (i = s.find("--")) != std::string::npos;)
    s.replace(i, 2, "- -");
  return s;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points; // (p, log10 value)
};

} // namespace

int CsvTable::column(const std::string &name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

CsvTable read_csv(const std::string &text) {
  CsvTable t;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (line[0] == '#') {
      t.comments.push_back(line.size() > 1 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    if (t.columns.empty())
      t.columns = split(line);
    else
      t.rows.push_back(split(line));
  }
  return t;
}

std::string semilog_svg(const CsvTable &table, const std::string &column, const PlotLayout &lay) {
  const int ip = table.column("p"), ie = table.column("epsilon"), iv = table.column(column);
  for (const auto &[name, idx] : {std::pair{std::string("p"), ip}, std::pair{std::string("epsilon"), ie},
                                  std::pair{column, iv}})
    if (idx < 0)
      throw InputError("missing column '" + name + "'");

  std::vector<Series> series;
  std::map<std::string, std::size_t> by_eps;
  for (const auto &row : table.rows) {
    if (static_cast<int>(row.size()) <= std::max({ip, ie, iv}))
      continue;
    const double p = to_number(row[static_cast<std::size_t>(ip)]);
    const double v = to_number(row[static_cast<std::size_t>(iv)]);
    const std::string &eps = row[static_cast<std::size_t>(ie)];
    auto [it, fresh] = by_eps.try_emplace(eps, series.size());
    if (fresh)
      series.push_back({"eps = " + fmt("%.3g", to_number(eps)), {}});
    if (std::isfinite(p) && std::isfinite(v) && v > 0.0)
      series[it->second].points.emplace_back(p, std::log10(v));
  }

  double pmin = 1e300, pmax = -1e300, lmin = 1e300, lmax = -1e300;
  for (const auto &s : series)
    for (const auto &[p, l] : s.points) {
      pmin = std::min(pmin, p);
      pmax = std::max(pmax, p);
      lmin = std::min(lmin, l);
      lmax = std::max(lmax, l);
    }
  const bool empty = pmin > pmax;
  if (empty) {
    pmin = 1;
    pmax = 2;
    lmin = -1;
    lmax = 0;
  }
  if (pmax == pmin) {
    pmin -= 0.5;
    pmax += 0.5;
  }
  double dlo = std::floor(lmin), dhi = std::ceil(lmax);
  if (dhi == dlo)
    dhi = dlo + 1;

  const double x0 = lay.left, x1 = lay.width - lay.right, y0 = lay.top, y1 = lay.height - lay.bottom;
  const auto px = [&](double p) { return x0 + (p - pmin) / (pmax - pmin) * (x1 - x0); };
  const auto py = [&](double l) { return y1 - (l - dlo) / (dhi - dlo) * (y1 - y0); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!table.comments.empty()) {
    svg << "<!--\n";
    for (const auto &c : table.comments)
      svg << xml_comment(c) << '\n';
    svg << "-->\n";
  }
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << lay.width << "\" height=\"" << lay.height
      << "\" viewBox=\"0 0 " << lay.width << ' ' << lay.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n"
      << "<line x1=\"" << fmt("%.2f", x0) << "\" y1=\"" << fmt("%.2f", y1) << "\" x2=\"" << fmt("%.2f", x1)
      << "\" y2=\"" << fmt("%.2f", y1) << "\"/>\n"
      << "<line x1=\"" << fmt("%.2f", x0) << "\" y1=\"" << fmt("%.2f", y0) << "\" x2=\"" << fmt("%.2f", x0)
      << "\" y2=\"" << fmt("%.2f", y1) << "\"/>\n"
      << "</g>\n";

  svg << "<g class=\"ticks\">\n";
  const int pstep = std::max(1, static_cast<int>(std::ceil((pmax - pmin) / 12.0)));
  for (int p = static_cast<int>(std::ceil(pmin)); p <= pmax; p += pstep)
    svg << "<line x1=\"" << fmt("%.2f", px(p)) << "\" y1=\"" << fmt("%.2f", y1) << "\" x2=\"" << fmt("%.2f", px(p))
        << "\" y2=\"" << fmt("%.2f", y1 + 5) << "\" stroke=\"black\"/>"
        << "<text x=\"" << fmt("%.2f", px(p)) << "\" y=\"" << fmt("%.2f", y1 + 18) << "\" text-anchor=\"middle\">"
        << p << "</text>\n";
  const int lstep = std::max(1, static_cast<int>(std::ceil((dhi - dlo) / 10.0)));
  for (int d = static_cast<int>(dlo); d <= dhi; d += lstep)
    svg << "<line x1=\"" << fmt("%.2f", x0 - 5) << "\" y1=\"" << fmt("%.2f", py(d)) << "\" x2=\"" << fmt("%.2f", x1)
        << "\" y2=\"" << fmt("%.2f", py(d)) << "\" stroke=\"#dddddd\"/>"
        << "<text x=\"" << fmt("%.2f", x0 - 8) << "\" y=\"" << fmt("%.2f", py(d) + 4)
        << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  svg << "</g>\n";
  svg << "<text x=\"" << fmt("%.2f", 0.5 * (x0 + x1)) << "\" y=\"" << lay.height - 15
      << "\" text-anchor=\"middle\">p</text>\n"
      << "<text x=\"15\" y=\"" << fmt("%.2f", 0.5 * (y0 + y1)) << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << fmt("%.2f", 0.5 * (y0 + y1)) << ")\">" << column << "</text>\n";

  if (empty) {
    svg << "<text class=\"nodata\" x=\"" << fmt("%.2f", 0.5 * (x0 + x1)) << "\" y=\"" << fmt("%.2f", 0.5 * (y0 + y1))
        << "\" text-anchor=\"middle\">no data</text>\n";
  } else {
    for (std::size_t k = 0; k < series.size(); ++k) {
      const Series &s = series[k];
      if (s.points.empty())
        continue;
      const char *color = kColors[k % std::size(kColors)];
      svg << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i)
        svg << (i ? " " : "") << fmt("%.2f", px(s.points[i].first)) << ',' << fmt("%.2f", py(s.points[i].second));
      svg << "\"/>\n";
    }
  }

  svg << "<g class=\"legend\">\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double y = y0 + 10 + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << fmt("%.2f", x1 + 15) << "\" y1=\"" << fmt("%.2f", y) << "\" x2=\"" << fmt("%.2f", x1 + 40)
        << "\" y2=\"" << fmt("%.2f", y) << "\" stroke=\"" << kColors[k % std::size(kColors)]
        << "\" stroke-width=\"1.5\"/>"
        << "<text x=\"" << fmt("%.2f", x1 + 45) << "\" y=\"" << fmt("%.2f", y + 4) << "\">" << series[k].label
        << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

std::string emit_plot(const std::string &csv_text, const std::string &column) {
  return semilog_svg(read_csv(csv_text), column);
}

} // namespace hpsbl
