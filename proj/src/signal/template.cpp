#include <charconv>
#include <fstream>
#include <sstream>

#include "burstnet/signal.hpp"

namespace burstnet::signal {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view v, std::string_view key) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw SignalError("template key '" + std::string(key) + "': '" + std::string(v) + "' is not a number");
  return out;
}

std::size_t parse_size(std::string_view v, std::string_view key) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw SignalError("template key '" + std::string(key) + "': '" + std::string(v) + "' is not a count");
  return out;
}

}  // namespace

WaveformTemplate parse_waveform_template(std::string_view text) {
  WaveformTemplate t;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw SignalError("template line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "acars_baud") t.acars_baud = parse_double(value, key);
    else if (key == "acars_deviation_hz") t.acars_deviation_hz = parse_double(value, key);
    else if (key == "acars_ramp_symbols") t.acars_ramp_symbols = parse_size(value, key);
    else if (key == "acars_carrier_hz") t.acars_carrier_hz = parse_double(value, key);
    else if (key == "adsb_chip_us") t.adsb_chip_us = parse_double(value, key);
    else if (key == "adsb_preamble_chip_count") t.adsb_preamble_chip_count = parse_size(value, key);
    else if (key == "adsb_frame_bits") t.adsb_frame_bits = parse_size(value, key);
    else if (key == "adsb_carrier_hz") t.adsb_carrier_hz = parse_double(value, key);
    else if (key == "adsb_preamble_chips") {
      t.adsb_preamble_chips.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        t.adsb_preamble_chips.push_back(parse_size(trim(rest.substr(0, comma)), key));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      }
    } else {
      throw SignalError("template line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  if (t.acars_baud <= 0 || t.adsb_chip_us <= 0) throw SignalError("template rates must be positive");
  for (auto c : t.adsb_preamble_chips)
    if (c >= t.adsb_preamble_chip_count) throw SignalError("preamble pulse chip lies outside the preamble");
  return t;
}

WaveformTemplate load_waveform_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SignalError("cannot open waveform template '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_waveform_template(ss.str());
}

std::string format_waveform_template(const WaveformTemplate& t) {
  std::ostringstream os;
  os.precision(17);
  os << "acars_baud = " << t.acars_baud << "\n"
     << "acars_deviation_hz = " << t.acars_deviation_hz << "\n"
     << "acars_ramp_symbols = " << t.acars_ramp_symbols << "\n"
     << "acars_carrier_hz = " << t.acars_carrier_hz << "\n"
     << "adsb_chip_us = " << t.adsb_chip_us << "\n"
     << "adsb_preamble_chips = ";
  for (std::size_t i = 0; i < t.adsb_preamble_chips.size(); ++i) os << (i ? "," : "") << t.adsb_preamble_chips[i];
  os << "\n"
     << "adsb_preamble_chip_count = " << t.adsb_preamble_chip_count << "\n"
     << "adsb_frame_bits = " << t.adsb_frame_bits << "\n"
     << "adsb_carrier_hz = " << t.adsb_carrier_hz << "\n";
  return os.str();
}

}  // namespace burstnet::signal
