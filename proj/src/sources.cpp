#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "drowsy/errors.hpp"
#include "drowsy/pipeline.hpp"

namespace drowsy {

namespace {

struct HostPort {
  in_addr addr{};
  std::uint16_t port = 0;
};

HostPort parse_host_port(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("tcp address must be HOST:PORT, got \"" + std::string(text) + "\"");
  }
  std::string host(text.substr(0, colon));
  const std::string_view port_text = text.substr(colon + 1);
  if (host == "localhost") host = "127.0.0.1";
  HostPort hp;
  if (inet_pton(AF_INET, host.c_str(), &hp.addr) != 1) {
    throw ConfigError("invalid IPv4 address \"" + host + "\"");
  }
  unsigned port = 0;
  const auto r = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (r.ec != std::errc{} || r.ptr != port_text.data() + port_text.size() || port > 65535) {
    throw ConfigError("invalid tcp port \"" + std::string(port_text) + "\"");
  }
  hp.port = static_cast<std::uint16_t>(port);
  return hp;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

SourceSpec SourceSpec::parse(std::string_view text) {
  SourceSpec spec;
  if (text == "stdin" || text == "-") {
    spec.kind = SourceKind::stdin_pipe;
  } else if (text.starts_with("file:")) {
    spec.kind = SourceKind::file;
    spec.location = std::string(text.substr(5));
    if (spec.location.empty()) throw ConfigError("file source needs a path");
  } else if (text.starts_with("tcp:")) {
    spec.kind = SourceKind::tcp;
    spec.location = std::string(text.substr(4));
    parse_host_port(spec.location);
  } else {
    throw ConfigError("unknown source \"" + std::string(text) + "\" (expected stdin, file:PATH or tcp:HOST:PORT)");
  }
  return spec;
}

bool StreamSource::next_line(std::string& line) {
  if (!std::getline(in_, line)) return false;
  strip_cr(line);
  return true;
}

FileSource::FileSource(const std::string& path) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    throw SourceUnavailable("\"" + path + "\" is a directory");
  }
  auto f = std::make_unique<std::ifstream>(path);
  if (!*f) {
    throw SourceUnavailable("cannot open \"" + path + "\": " + std::strerror(errno));
  }
  in_ = std::move(f);
}

FileSource::~FileSource() = default;

bool FileSource::next_line(std::string& line) {
  if (!std::getline(*in_, line)) return false;
  strip_cr(line);
  return true;
}

bool MemorySource::next_line(std::string& line) {
  if (next_ >= lines_.size()) return false;
  line = lines_[next_++];
  return true;
}

bool MemorySource::next_view(std::string_view& line) {
  if (next_ >= lines_.size()) return false;
  line = lines_[next_++];
  return true;
}

TcpSource::TcpSource(const std::string& address) {
  const HostPort hp = parse_host_port(address);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) {
    throw SourceUnavailable(std::string("socket: ") + std::strerror(errno));
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr = hp.addr;
  sa.sin_port = htons(hp.port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 || ::listen(listen_fd_, 1) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw SourceUnavailable("cannot listen on " + address + ": " + err);
  }
  socklen_t len = sizeof sa;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
}

TcpSource::~TcpSource() {
  if (conn_fd_ >= 0) ::close(conn_fd_);
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

bool TcpSource::next_line(std::string& line) {
  if (conn_fd_ < 0) {
    do {
      conn_fd_ = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    } while (conn_fd_ < 0 && errno == EINTR);
    if (conn_fd_ < 0) {
      throw SourceUnavailable(std::string("accept: ") + std::strerror(errno));
    }
  }
  for (;;) {
    const auto nl = buffer_.find('\n', consumed_);
    if (nl != std::string::npos) {
      line.assign(buffer_, consumed_, nl - consumed_);
      consumed_ = nl + 1;
      strip_cr(line);
      return true;
    }
    if (eof_) {
      if (consumed_ < buffer_.size()) {
        line.assign(buffer_, consumed_);
        consumed_ = buffer_.size();
        strip_cr(line);
        return true;
      }
      return false;
    }
    buffer_.erase(0, consumed_);
    consumed_ = 0;
    char chunk[65536];
    ssize_t n;
    do {
      n = ::recv(conn_fd_, chunk, sizeof chunk, 0);
    } while (n < 0 && errno == EINTR);
    if (n < 0) {
      throw SourceUnavailable(std::string("recv: ") + std::strerror(errno));
    }
    if (n == 0) {
      eof_ = true;
    } else {
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }
}

std::unique_ptr<LineSource> open_source(const SourceSpec& spec, std::istream& stdin_stream) {
  switch (spec.kind) {
    case SourceKind::file: return std::make_unique<FileSource>(spec.location);
    case SourceKind::tcp: return std::make_unique<TcpSource>(spec.location);
    case SourceKind::stdin_pipe: break;
  }
  return std::make_unique<StreamSource>(stdin_stream);
}

}  // namespace drowsy
