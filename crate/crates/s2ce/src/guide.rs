//! Guide doc-tests placeholder.
