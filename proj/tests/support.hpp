#pragma once

#include <gtest/gtest.h>

#include "radcal/error.hpp"

namespace support {

/// Kind of the radcal::Error thrown by f; fails the test if nothing is thrown.
template <class F>
radcal::ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const radcal::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return radcal::ErrorKind::Io;
}

}  // namespace support
