# BPT mesh tokenization toolkit
