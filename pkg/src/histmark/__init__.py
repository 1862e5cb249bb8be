"""Local histogram-shifting watermarking."""
