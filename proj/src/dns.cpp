// Copyright 2026 The qrfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qrfuzz/dns.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_set>

namespace qrfuzz::dns {

namespace {

constexpr std::size_t kMaxNameWire = 255;
constexpr std::size_t kMaxLabel = 63;

std::uint8_t lower_byte(std::uint8_t b) {
  return (b >= 'A' && b <= 'Z') ? static_cast<std::uint8_t>(b + 32) : b;
}

bool label_equal_ci(const Bytes& a, const Bytes& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (lower_byte(a[i]) != lower_byte(b[i])) return false;
  }
  return true;
}

void validate_labels(const std::vector<Bytes>& labels) {
  std::size_t total = 1;
  for (const auto& label : labels) {
    if (label.empty()) throw EncodeError("empty label");
    if (label.size() > kMaxLabel) {
      throw EncodeError("label exceeds 63 octets: \"" +
                        std::string(label.begin(), label.end()) + "\"");
    }
    total += label.size() + 1;
  }
  if (total > kMaxNameWire) {
    throw EncodeError("name exceeds 255 encoded octets");
  }
}

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

std::uint16_t get_u16(const Bytes& in, std::size_t pos) {
  return static_cast<std::uint16_t>((in[pos] << 8) | in[pos + 1]);
}

std::uint32_t get_u32(const Bytes& in, std::size_t pos) {
  return (static_cast<std::uint32_t>(in[pos]) << 24) |
         (static_cast<std::uint32_t>(in[pos + 1]) << 16) |
         (static_cast<std::uint32_t>(in[pos + 2]) << 8) |
         static_cast<std::uint32_t>(in[pos + 3]);
}

}  // namespace

DnsName DnsName::from_labels(std::vector<Bytes> labels) {
  validate_labels(labels);
  DnsName n;
  n.labels_ = std::move(labels);
  return n;
}

DnsName DnsName::from_text(const std::string& text) {
  if (text.empty() || text == ".") return DnsName();
  std::vector<Bytes> labels;
  Bytes current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\\') {
      if (i + 3 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])) &&
          std::isdigit(static_cast<unsigned char>(text[i + 2])) &&
          std::isdigit(static_cast<unsigned char>(text[i + 3]))) {
        int v = (text[i + 1] - '0') * 100 + (text[i + 2] - '0') * 10 +
                (text[i + 3] - '0');
        if (v > 255) throw EncodeError("bad escape in name: " + text);
        current.push_back(static_cast<std::uint8_t>(v));
        i += 3;
      } else if (i + 1 < text.size()) {
        current.push_back(static_cast<std::uint8_t>(text[i + 1]));
        ++i;
      } else {
        throw EncodeError("dangling escape in name: " + text);
      }
    } else if (c == '.') {
      if (current.empty()) throw EncodeError("empty label in name: " + text);
      labels.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<std::uint8_t>(c));
    }
  }
  if (!current.empty()) labels.push_back(std::move(current));
  return from_labels(std::move(labels));
}

std::size_t DnsName::encoded_size() const {
  std::size_t total = 1;
  for (const auto& label : labels_) total += label.size() + 1;
  return total;
}

namespace {
std::string label_to_text(const Bytes& label, bool lowercase) {
  std::string out;
  for (std::uint8_t b : label) {
    if (b == '.' ) {
      out += "\\.";
    } else if (b == '\\') {
      out += "\\\\";
    } else if (b >= 0x21 && b <= 0x7e) {
      char c = static_cast<char>(b);
      if (lowercase) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(c);
    } else {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\%03u", b);
      out += buf;
    }
  }
  return out;
}
}  // namespace

std::string DnsName::to_text() const {
  if (labels_.empty()) return ".";
  std::string out;
  for (const auto& label : labels_) {
    out += label_to_text(label, false);
    out.push_back('.');
  }
  return out;
}

std::string DnsName::to_canonical_text() const {
  if (labels_.empty()) return ".";
  std::string out;
  for (const auto& label : labels_) {
    out += label_to_text(label, true);
    out.push_back('.');
  }
  return out;
}

DnsName DnsName::parent() const {
  DnsName n;
  if (labels_.size() > 1) {
    n.labels_.assign(labels_.begin() + 1, labels_.end());
  }
  return n;
}

DnsName DnsName::with_prefix_label(const Bytes& label) const {
  std::vector<Bytes> labels;
  labels.reserve(labels_.size() + 1);
  labels.push_back(label);
  labels.insert(labels.end(), labels_.begin(), labels_.end());
  return from_labels(std::move(labels));
}

bool DnsName::under_or_equal(const DnsName& ancestor) const {
  if (ancestor.labels_.size() > labels_.size()) return false;
  std::size_t offset = labels_.size() - ancestor.labels_.size();
  for (std::size_t i = 0; i < ancestor.labels_.size(); ++i) {
    if (!label_equal_ci(labels_[offset + i], ancestor.labels_[i])) return false;
  }
  return true;
}

bool operator==(const DnsName& a, const DnsName& b) {
  if (a.labels_.size() != b.labels_.size()) return false;
  for (std::size_t i = 0; i < a.labels_.size(); ++i) {
    if (!label_equal_ci(a.labels_[i], b.labels_[i])) return false;
  }
  return true;
}

std::uint16_t Flags::to_u16() const {
  return static_cast<std::uint16_t>(
      (qr & 1) << 15 | (opcode & 0xf) << 11 | (aa & 1) << 10 | (tc & 1) << 9 |
      (rd & 1) << 8 | (ra & 1) << 7 | (z & 1) << 6 | (ad & 1) << 5 |
      (cd & 1) << 4 | (rcode & 0xf));
}

Flags Flags::from_u16(std::uint16_t v) {
  Flags f;
  f.qr = (v >> 15) & 1;
  f.opcode = (v >> 11) & 0xf;
  f.aa = (v >> 10) & 1;
  f.tc = (v >> 9) & 1;
  f.rd = (v >> 8) & 1;
  f.ra = (v >> 7) & 1;
  f.z = (v >> 6) & 1;
  f.ad = (v >> 5) & 1;
  f.cd = (v >> 4) & 1;
  f.rcode = v & 0xf;
  return f;
}

ResourceRecord ResourceRecord::make(DnsName name, std::uint16_t type,
                                    std::uint16_t rclass, std::uint32_t ttl,
                                    Bytes rdata) {
  ResourceRecord rr;
  rr.name = std::move(name);
  rr.type = type;
  rr.rclass = rclass;
  rr.ttl = ttl;
  rr.rdlength = static_cast<std::uint16_t>(rdata.size());
  rr.rdata = std::move(rdata);
  return rr;
}

Bytes encode_name(const DnsName& name) {
  Bytes out;
  out.reserve(name.encoded_size());
  for (const auto& label : name.labels()) {
    out.push_back(static_cast<std::uint8_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
  }
  out.push_back(0);
  return out;
}

Bytes encode_question(const Question& q) {
  Bytes out = encode_name(q.qname);
  put_u16(out, q.qtype);
  put_u16(out, q.qclass);
  return out;
}

Bytes encode_record(const ResourceRecord& rr) {
  Bytes out = encode_name(rr.name);
  put_u16(out, rr.type);
  put_u16(out, rr.rclass);
  put_u32(out, rr.ttl);
  put_u16(out, rr.rdlength);
  out.insert(out.end(), rr.rdata.begin(), rr.rdata.end());
  return out;
}

Bytes encode_message(const DnsMessage& msg) {
  if (msg.raw_override) return *msg.raw_override;
  Bytes out;
  put_u16(out, msg.txid);
  put_u16(out, msg.flags.to_u16());
  put_u16(out, msg.qdcount);
  put_u16(out, msg.ancount);
  put_u16(out, msg.nscount);
  put_u16(out, msg.arcount);
  for (const auto& q : msg.questions) {
    Bytes b = encode_question(q);
    out.insert(out.end(), b.begin(), b.end());
  }
  for (const auto* section : {&msg.answers, &msg.authorities, &msg.additionals}) {
    for (const auto& rr : *section) {
      Bytes b = encode_record(rr);
      out.insert(out.end(), b.begin(), b.end());
    }
  }
  out.insert(out.end(), msg.trailing.begin(), msg.trailing.end());
  return out;
}

namespace {

// Internal decode signals. Hard errors abort the whole decode with a
// classified error; soft failures stop section parsing and leave the
// remaining octets as trailing data.
struct HardError {
  DecodeError err;
};

struct NameParse {
  DnsName name;
  std::size_t end = 0;  // position after the name in the main stream
  bool ok = false;      // false = soft failure
  bool compressed = false;
};

NameParse parse_name(const Bytes& buf, std::size_t start) {
  NameParse result;
  std::vector<Bytes> labels;
  std::unordered_set<std::size_t> visited;
  std::size_t pos = start;
  bool jumped = false;
  std::size_t end_after = 0;
  while (true) {
    if (pos >= buf.size()) return result;  // ran out of octets
    if (visited.count(pos)) {
      throw HardError{{DecodeErrorKind::kPointerLoop, pos, "name loops"}};
    }
    visited.insert(pos);
    std::uint8_t len = buf[pos];
    if (len == 0) {
      if (!jumped) end_after = pos + 1;
      break;
    }
    if ((len & 0xc0) == 0xc0) {
      if (pos + 1 >= buf.size()) return result;
      std::size_t target =
          (static_cast<std::size_t>(len & 0x3f) << 8) | buf[pos + 1];
      if (target >= buf.size()) {
        throw HardError{{DecodeErrorKind::kPointerOutOfRange, target,
                         "pointer target beyond packet"}};
      }
      if (!jumped) end_after = pos + 2;
      jumped = true;
      result.compressed = true;
      pos = target;
      continue;
    }
    if ((len & 0xc0) != 0) return result;  // reserved label type
    if (pos + 1 + len > buf.size()) return result;
    labels.emplace_back(buf.begin() + pos + 1, buf.begin() + pos + 1 + len);
    pos += 1 + len;
  }
  try {
    result.name = DnsName::from_labels(std::move(labels));
  } catch (const EncodeError&) {
    return result;  // expansion exceeds name limits
  }
  result.end = end_after;
  result.ok = true;
  return result;
}

struct RecordParse {
  ResourceRecord rr;
  std::size_t end = 0;
  bool ok = false;
  bool compressed = false;
};

RecordParse parse_record(const Bytes& buf, std::size_t start) {
  RecordParse result;
  NameParse np = parse_name(buf, start);
  if (!np.ok) return result;
  result.compressed = np.compressed;
  std::size_t pos = np.end;
  if (pos + 10 > buf.size()) return result;
  result.rr.name = std::move(np.name);
  result.rr.type = get_u16(buf, pos);
  result.rr.rclass = get_u16(buf, pos + 2);
  result.rr.ttl = get_u32(buf, pos + 4);
  result.rr.rdlength = get_u16(buf, pos + 8);
  pos += 10;
  std::size_t take = std::min<std::size_t>(result.rr.rdlength, buf.size() - pos);
  result.rr.rdata.assign(buf.begin() + pos, buf.begin() + pos + take);
  result.end = pos + take;
  result.ok = true;
  return result;
}

}  // namespace

DecodeResult decode_message(const Bytes& octets) {
  DecodeResult out;
  if (octets.size() < 12) {
    out.error = DecodeError{DecodeErrorKind::kTruncatedHeader, octets.size(),
                            "header needs 12 octets"};
    return out;
  }
  DnsMessage msg;
  msg.txid = get_u16(octets, 0);
  msg.flags = Flags::from_u16(get_u16(octets, 2));
  msg.qdcount = get_u16(octets, 4);
  msg.ancount = get_u16(octets, 6);
  msg.nscount = get_u16(octets, 8);
  msg.arcount = get_u16(octets, 10);

  std::size_t pos = 12;
  bool stopped = false;
  try {
    out.offsets.question = pos;
    for (std::uint16_t i = 0; i < msg.qdcount && !stopped; ++i) {
      NameParse np = parse_name(octets, pos);
      if (!np.ok || np.end + 4 > octets.size()) {
        stopped = true;
        break;
      }
      out.used_compression = out.used_compression || np.compressed;
      Question q;
      q.qname = std::move(np.name);
      q.qtype = get_u16(octets, np.end);
      q.qclass = get_u16(octets, np.end + 2);
      msg.questions.push_back(std::move(q));
      pos = np.end + 4;
    }
    struct SectionPlan {
      std::uint16_t count;
      std::vector<ResourceRecord>* dest;
      std::size_t* offset;
    };
    SectionPlan plan[] = {
        {msg.ancount, &msg.answers, &out.offsets.answer},
        {msg.nscount, &msg.authorities, &out.offsets.authority},
        {msg.arcount, &msg.additionals, &out.offsets.additional},
    };
    for (auto& section : plan) {
      *section.offset = pos;
      if (stopped) continue;
      for (std::uint16_t i = 0; i < section.count; ++i) {
        RecordParse rp = parse_record(octets, pos);
        if (!rp.ok) {
          stopped = true;
          break;
        }
        out.used_compression = out.used_compression || rp.compressed;
        section.dest->push_back(std::move(rp.rr));
        pos = rp.end;
      }
    }
  } catch (const HardError& hard) {
    out.error = hard.err;
    return out;
  }
  msg.trailing.assign(octets.begin() + pos, octets.end());
  out.message = std::move(msg);
  return out;
}

Bytes frame_tcp(const Bytes& payload) {
  if (payload.size() > 0xffff) {
    throw EncodeError("tcp payload exceeds 65535 octets");
  }
  Bytes out;
  put_u16(out, static_cast<std::uint16_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::optional<Bytes> unframe_tcp(const Bytes& octets, std::string* err) {
  if (octets.size() < 2) {
    if (err) *err = "length prefix missing";
    return std::nullopt;
  }
  std::size_t len = get_u16(octets, 0);
  if (octets.size() < 2 + len) {
    if (err) *err = "payload shorter than length prefix";
    return std::nullopt;
  }
  return Bytes(octets.begin() + 2, octets.begin() + 2 + len);
}

namespace {

struct CodeName {
  std::uint16_t code;
  const char* name;
};

constexpr CodeName kTypes[] = {
    {1, "A"},       {2, "NS"},         {5, "CNAME"},  {6, "SOA"},
    {12, "PTR"},    {15, "MX"},        {16, "TXT"},   {28, "AAAA"},
    {33, "SRV"},    {41, "OPT"},       {43, "DS"},    {46, "RRSIG"},
    {47, "NSEC"},   {48, "DNSKEY"},    {50, "NSEC3"}, {51, "NSEC3PARAM"},
    {64, "SVCB"},   {65, "HTTPS"},     {99, "SPF"},   {252, "AXFR"},
    {255, "ANY"},
};

constexpr CodeName kClasses[] = {
    {1, "IN"}, {3, "CH"}, {4, "HS"}, {254, "NONE"}, {255, "ANY"},
};

constexpr CodeName kOpcodes[] = {
    {0, "QUERY"}, {1, "IQUERY"}, {2, "STATUS"},
    {4, "NOTIFY"}, {5, "UPDATE"}, {6, "DSO"},
};

constexpr CodeName kRcodes[] = {
    {0, "NOERROR"},   {1, "FORMERR"},  {2, "SERVFAIL"}, {3, "NXDOMAIN"},
    {4, "NOTIMP"},    {5, "REFUSED"},  {6, "YXDOMAIN"}, {7, "YXRRSET"},
    {8, "NXRRSET"},   {9, "NOTAUTH"},  {10, "NOTZONE"}, {11, "DSOTYPENI"},
    {16, "BADVERS"},  {17, "BADKEY"},  {18, "BADTIME"}, {19, "BADMODE"},
    {20, "BADNAME"},  {21, "BADALG"},  {22, "BADTRUNC"}, {23, "BADCOOKIE"},
};

template <std::size_t N>
std::string code_to_name(const CodeName (&table)[N], std::uint16_t code,
                         const char* prefix) {
  for (const auto& e : table) {
    if (e.code == code) return e.name;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%s%u", prefix, code);
  return buf;
}

template <std::size_t N>
std::optional<std::uint16_t> name_to_code(const CodeName (&table)[N],
                                          const std::string& name,
                                          const char* prefix) {
  std::string upper = name;
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& e : table) {
    if (upper == e.name) return e.code;
  }
  std::string p = prefix;
  if (upper.size() > p.size() && upper.compare(0, p.size(), p) == 0) {
    std::uint32_t v = 0;
    for (std::size_t i = p.size(); i < upper.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(upper[i]))) return std::nullopt;
      v = v * 10 + static_cast<std::uint32_t>(upper[i] - '0');
      if (v > 0xffff) return std::nullopt;
    }
    return static_cast<std::uint16_t>(v);
  }
  return std::nullopt;
}

}  // namespace

std::string type_name(std::uint16_t code) { return code_to_name(kTypes, code, "TYPE"); }
std::optional<std::uint16_t> type_code(const std::string& name) {
  return name_to_code(kTypes, name, "TYPE");
}
std::string class_name(std::uint16_t code) { return code_to_name(kClasses, code, "CLASS"); }
std::optional<std::uint16_t> class_code(const std::string& name) {
  return name_to_code(kClasses, name, "CLASS");
}
std::string opcode_name(std::uint8_t code) { return code_to_name(kOpcodes, code, "OPCODE"); }
std::optional<std::uint8_t> opcode_code(const std::string& name) {
  auto v = name_to_code(kOpcodes, name, "OPCODE");
  if (!v || *v > 15) return std::nullopt;
  return static_cast<std::uint8_t>(*v);
}
std::string rcode_name(std::uint8_t code) { return code_to_name(kRcodes, code, "RCODE"); }
std::optional<std::uint8_t> rcode_code(const std::string& name) {
  auto v = name_to_code(kRcodes, name, "RCODE");
  if (!v || *v > 255) return std::nullopt;
  return static_cast<std::uint8_t>(*v);
}

}  // namespace qrfuzz::dns
