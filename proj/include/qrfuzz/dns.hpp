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

// DNS wire format: names, header flags, resource records, whole messages,
// and a total decoder that never aborts on arbitrary octets.
//
// Encoding never emits compression pointers; decoding follows them. The
// stored rdlength of a record is encoded verbatim even when it disagrees
// with the rdata length (intentional for fuzzing). A message may carry a
// whole-message raw override, in which case encode returns it unchanged.

#ifndef QRFUZZ_DNS_HPP_
#define QRFUZZ_DNS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qrfuzz/common.hpp"

namespace qrfuzz::dns {

class EncodeError : public std::runtime_error {
 public:
  explicit EncodeError(const std::string& what) : std::runtime_error(what) {}
};

// A domain name as a sequence of labels (root = no labels). Construction
// enforces wire validity: each label 1..63 octets, encoded size <= 255.
// Comparisons are ASCII case-insensitive; the stored octets keep their case.
class DnsName {
 public:
  DnsName() = default;

  static DnsName from_text(const std::string& text);        // throws EncodeError
  static DnsName from_labels(std::vector<Bytes> labels);    // throws EncodeError

  const std::vector<Bytes>& labels() const { return labels_; }
  bool is_root() const { return labels_.empty(); }
  std::size_t label_count() const { return labels_.size(); }

  // Encoded wire size including the terminating zero octet.
  std::size_t encoded_size() const;

  // Master-file style text: labels joined with '.', always a trailing dot,
  // root rendered as ".". Bytes outside the printable range and the special
  // characters '.' and '\' are escaped ('\.' '\\' or '\DDD').
  std::string to_text() const;
  // Same, with ASCII letters lowercased (canonical cache-key form).
  std::string to_canonical_text() const;

  DnsName parent() const;                                  // root stays root
  DnsName with_prefix_label(const Bytes& label) const;     // throws EncodeError
  bool under_or_equal(const DnsName& ancestor) const;      // case-insensitive

  friend bool operator==(const DnsName& a, const DnsName& b);

 private:
  std::vector<Bytes> labels_;
};

// Header flag word. rcode holds the 4-bit header field; extended codes
// (16..23) cannot travel in a bare header and are carried by the generator
// as metadata instead.
struct Flags {
  std::uint8_t qr = 0;
  std::uint8_t opcode = 0;  // 4 bits
  std::uint8_t aa = 0;
  std::uint8_t tc = 0;
  std::uint8_t rd = 0;
  std::uint8_t ra = 0;
  std::uint8_t z = 0;
  std::uint8_t ad = 0;
  std::uint8_t cd = 0;
  std::uint8_t rcode = 0;  // 4 bits

  std::uint16_t to_u16() const;
  static Flags from_u16(std::uint16_t v);
  friend bool operator==(const Flags&, const Flags&) = default;
};

struct Question {
  DnsName qname;
  std::uint16_t qtype = 1;
  std::uint16_t qclass = 1;
  friend bool operator==(const Question&, const Question&) = default;
};

struct ResourceRecord {
  DnsName name;
  std::uint16_t type = 1;
  std::uint16_t rclass = 1;
  std::uint32_t ttl = 0;
  std::uint16_t rdlength = 0;  // stored explicitly; may differ from rdata size
  Bytes rdata;

  static ResourceRecord make(DnsName name, std::uint16_t type,
                             std::uint16_t rclass, std::uint32_t ttl,
                             Bytes rdata);
  friend bool operator==(const ResourceRecord&, const ResourceRecord&) = default;
};

// Counts are stored independently of the section vectors so that decoded
// messages can report counts as read even when records are unparseable.
struct DnsMessage {
  std::uint16_t txid = 0;
  Flags flags;
  std::uint16_t qdcount = 0;
  std::uint16_t ancount = 0;
  std::uint16_t nscount = 0;
  std::uint16_t arcount = 0;
  std::vector<Question> questions;
  std::vector<ResourceRecord> answers;
  std::vector<ResourceRecord> authorities;
  std::vector<ResourceRecord> additionals;
  Bytes trailing;  // octets past the parsed sections, kept verbatim
  std::optional<Bytes> raw_override;  // encode returns this verbatim when set

  friend bool operator==(const DnsMessage&, const DnsMessage&) = default;
};

enum class DecodeErrorKind {
  kTruncatedHeader,
  kPointerLoop,
  kPointerOutOfRange,
};

// offset semantics: kTruncatedHeader -> input size; kPointerLoop -> the
// revisited offset; kPointerOutOfRange -> the out-of-range target.
struct DecodeError {
  DecodeErrorKind kind;
  std::size_t offset = 0;
  std::string detail;
};

struct SectionOffsets {
  std::size_t question = 0;
  std::size_t answer = 0;
  std::size_t authority = 0;
  std::size_t additional = 0;
};

struct DecodeResult {
  std::optional<DnsMessage> message;
  std::optional<DecodeError> error;
  SectionOffsets offsets;
  // True when any name was read through a compression pointer. Encoding
  // never emits pointers, so re-encoding such a message cannot reproduce
  // the original octets byte for byte.
  bool used_compression = false;
  bool ok() const { return message.has_value(); }
};

Bytes encode_name(const DnsName& name);
Bytes encode_question(const Question& q);
Bytes encode_record(const ResourceRecord& rr);
Bytes encode_message(const DnsMessage& msg);
DecodeResult decode_message(const Bytes& octets);

Bytes frame_tcp(const Bytes& payload);  // throws EncodeError if > 65535
// Returns the framed payload, or nullopt (with *err set) on short input.
std::optional<Bytes> unframe_tcp(const Bytes& octets, std::string* err);

// Mnemonic tables. Unknown codes render as "TYPE123" / "CLASS123" /
// "OPCODE123" / "RCODE123" and parse back from that form.
std::string type_name(std::uint16_t code);
std::optional<std::uint16_t> type_code(const std::string& name);
std::string class_name(std::uint16_t code);
std::optional<std::uint16_t> class_code(const std::string& name);
std::string opcode_name(std::uint8_t code);
std::optional<std::uint8_t> opcode_code(const std::string& name);
std::string rcode_name(std::uint8_t code);
std::optional<std::uint8_t> rcode_code(const std::string& name);

namespace rrtype {
inline constexpr std::uint16_t kA = 1;
inline constexpr std::uint16_t kNs = 2;
inline constexpr std::uint16_t kCname = 5;
inline constexpr std::uint16_t kSoa = 6;
inline constexpr std::uint16_t kPtr = 12;
inline constexpr std::uint16_t kMx = 15;
inline constexpr std::uint16_t kTxt = 16;
inline constexpr std::uint16_t kAaaa = 28;
inline constexpr std::uint16_t kSrv = 33;
inline constexpr std::uint16_t kDs = 43;
inline constexpr std::uint16_t kRrsig = 46;
inline constexpr std::uint16_t kNsec = 47;
inline constexpr std::uint16_t kDnskey = 48;
inline constexpr std::uint16_t kNsec3 = 50;
inline constexpr std::uint16_t kNsec3param = 51;
inline constexpr std::uint16_t kSpf = 99;
inline constexpr std::uint16_t kAny = 255;
}  // namespace rrtype

namespace rrclass {
inline constexpr std::uint16_t kIn = 1;
}  // namespace rrclass

}  // namespace qrfuzz::dns

#endif  // QRFUZZ_DNS_HPP_
