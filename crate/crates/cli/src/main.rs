// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(amfm_cli::run(std::env::args_os().skip(1)));
}
