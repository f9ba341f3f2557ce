#pragma once

// Git blob object id of a byte string: SHA-1 over "blob <len>\0" + content,
// i.e. what `git hash-object` prints. Requires linking OpenSSL::Crypto.

#include <openssl/evp.h>

#include <cstdio>
#include <stdexcept>
#include <string>

namespace pvi {

inline std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  const std::string data = header + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    const unsigned char b = md[i];
    std::snprintf(buf, sizeof buf, "%02x", b);
    hex += buf;
  }
  return hex;
}

}  // namespace pvi
