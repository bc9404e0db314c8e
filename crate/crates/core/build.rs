fn main() {
    // System LAPACK/BLAS for the dense eigensolvers.
    println!("cargo:rustc-link-lib=dylib=lapack");
    println!("cargo:rustc-link-lib=dylib=blas");
}
