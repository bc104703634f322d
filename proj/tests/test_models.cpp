#include <doctest.h>

#include <cmath>

#include "cohmark/backends.hpp"
#include "cohmark/errors.hpp"
#include "cohmark/models.hpp"
#include "support/gradcheck.hpp"

using namespace cohmark;

TEST_CASE("concat_features on the unit fixture") {
    Vec out = concat_features({1, 0}, {0, 1});
    CHECK(out == Vec{1, 0, 0, 1, 1, -1, 0, 0, 1, 1});
}

TEST_CASE("concat_features with identical inputs") {
    Vec v{0.5, -2.0, 3.0};
    Vec out = concat_features(v, v);
    REQUIRE(out.size() == 15);
    for (int i = 0; i < 3; ++i) {
        CHECK(out[6 + i] == 0.0);                 // difference segment
        CHECK(out[9 + i] == doctest::Approx(v[i] * v[i]));  // product segment
        CHECK(out[12 + i] == 0.0);                // absolute difference
    }
}

TEST_CASE("concat_features matches a naive recomputation on random input") {
    Rng rng(17);
    Vec u1(8), u2(8);
    for (double& x : u1) x = rng.gauss();
    for (double& x : u2) x = rng.gauss();
    Vec out = concat_features(u1, u2);
    REQUIRE(out.size() == 40);
    for (int i = 0; i < 8; ++i) {
        CHECK(out[i] == u1[i]);
        CHECK(out[8 + i] == u2[i]);
        CHECK(out[16 + i] == doctest::Approx(u1[i] - u2[i]));
        CHECK(out[24 + i] == doctest::Approx(u1[i] * u2[i]));
        CHECK(out[32 + i] == doctest::Approx(std::fabs(u1[i] - u2[i])));
    }
}

TEST_CASE("concat_features swap permutes and negates the right segments") {
    Rng rng(29);
    Vec u1(5), u2(5);
    for (double& x : u1) x = rng.gauss();
    for (double& x : u2) x = rng.gauss();
    Vec ab = concat_features(u1, u2);
    Vec ba = concat_features(u2, u1);
    for (int i = 0; i < 5; ++i) {
        CHECK(ba[i] == ab[5 + i]);          // segment 1 <-> 2
        CHECK(ba[5 + i] == ab[i]);
        CHECK(ba[10 + i] == doctest::Approx(-ab[10 + i]));  // difference negates
        CHECK(ba[15 + i] == ab[15 + i]);    // product fixed
        CHECK(ba[20 + i] == ab[20 + i]);    // absolute difference fixed
    }
}

TEST_CASE("concat_features rejects mismatched dimensions") {
    CHECK_THROWS_AS(concat_features({1, 2}, {1, 2, 3}), DataError);
}

TEST_CASE("margin loss fixtures") {
    CHECK(margin_loss(7, 1, 5) == 0.0);
    CHECK(margin_loss(2, 1, 5) == 4.0);
    CHECK(margin_loss(0.3, 0.3, 3) == 3.0);
    CHECK(margin_loss(-4.0, -4.0, 3) == 3.0);
    // zero iff the margin is met
    CHECK(margin_loss(5.0, 0.0, 5) == 0.0);
    CHECK(margin_loss(4.999, 0.0, 5) > 0.0);
}

TEST_CASE("classifier score is 0.5 under a zero-weight head") {
    HashEncoder enc(16, 3);
    FfnnHead head(16, 0);
    Rng rng(1);
    head.init_params(rng);
    for (double& p : head.params()) p = 0.0;
    CHECK(classifier_score("the boy climbs", "the stool tips", enc, head) ==
          doctest::Approx(0.5));
}

TEST_CASE("classifier score stays strictly inside (0,1)") {
    HashEncoder enc(8, 0);
    FfnnHead head(8, 8);
    Rng rng(2);
    head.init_params(rng, 5.0);  // large weights push toward the bounds
    for (int i = 0; i < 20; ++i) {
        double f = classifier_score("a b c", "word" + std::to_string(i) + " more", enc, head);
        CHECK(f > 0.0);
        CHECK(f < 1.0);
    }
}

TEST_CASE("classifier monotone in a positive single-feature head") {
    // head = identity on one coordinate; raising that feature raises f
    FfnnHead head(3, 0);
    Rng rng(3);
    head.init_params(rng);
    head.params() = {1.0, 0.0, 0.0, 0.0};  // w = e0, b = 0
    auto f = [&](double x0) { return sigmoid(head.logit({x0, 0.3, -0.2})); };
    double prev = f(-2.0);
    for (double x = -1.5; x <= 2.0; x += 0.5) {
        double cur = f(x);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("untrained heads are rejected") {
    HashEncoder enc(8, 0);
    FfnnHead head(8, 0);  // never initialized
    CHECK_THROWS_AS(classifier_score("a", "b", enc, head), DataError);
    CHECK_THROWS_AS(discriminative_score("a", "b", enc, head), DataError);
}

TEST_CASE("discriminative zero-weight mlp scores zero everywhere") {
    HashEncoder enc(12, 1);
    FfnnHead mlp(60, 0);
    Rng rng(4);
    mlp.init_params(rng);
    for (double& p : mlp.params()) p = 0.0;
    CHECK(discriminative_score("the sink overflows", "mother dries dishes", enc, mlp) == 0.0);
}

TEST_CASE("discriminative forward equals backward for identical utterances") {
    HashEncoder enc(10, 2);
    FfnnHead mlp(50, 4);
    Rng rng(5);
    mlp.init_params(rng);
    std::string text = "the boy on the stool";
    double fwd = discriminative_score(text, text, enc, mlp, Direction::forward);
    double bwd = discriminative_score(text, text, enc, mlp, Direction::backward);
    double mean = discriminative_score(text, text, enc, mlp, Direction::mean);
    CHECK(fwd == doctest::Approx(bwd));
    CHECK(mean == doctest::Approx(fwd));
}

TEST_CASE("sequence perplexity of the uniform backend is |V| exactly") {
    UniformLm lm(16);
    CHECK(sequence_perplexity("any words at all here", lm) == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(generative_score("any words at all here", lm) == doctest::Approx(-15.0).epsilon(1e-12));
    UniformLm certain(1);  // assigns probability 1 to every token
    CHECK(sequence_perplexity("a b c", certain) == doctest::Approx(1.0));
    CHECK(generative_score("a b c", certain) == doctest::Approx(0.0));
}

TEST_CASE("sequence perplexity matches a hand-built bigram oracle") {
    // toy corpus: "a b", "a b c", "b c" over vocabulary {a, b, c}; add-1
    std::vector<std::vector<std::string>> corpus{{"a", "b"}, {"a", "b", "c"}, {"b", "c"}};
    BigramLm lm(corpus, 1.0);
    // hand-computed add-1 probabilities, V = 3:
    //   p(a|<s>) = (2+1)/(3+3) = 1/2   (contexts: <s> seen 3 times)
    //   p(b|a)   = (2+1)/(2+3) = 3/5   (a seen twice, always followed by b)
    //   p(c|b)   = (2+1)/(2+3) = 3/5   (b as context seen twice)
    double hand =
        std::exp(-(std::log(0.5) + std::log(0.6) + std::log(0.6)) / 3.0);
    CHECK(sequence_perplexity("a b c", lm) == doctest::Approx(hand).epsilon(1e-12));
    CHECK(lm.token_prob("<s>", "a") == doctest::Approx(0.5));
    CHECK(lm.token_prob("a", "b") == doctest::Approx(0.6));
    CHECK(lm.token_prob("b", "c") == doctest::Approx(0.6));
}

TEST_CASE("perplexity floor handles zero-probability tokens") {
    std::vector<std::vector<std::string>> corpus{{"a", "b"}};
    BigramLm lm(corpus, 0.0);  // no smoothing: unseen transitions have p = 0
    CHECK_THROWS_AS(sequence_perplexity("b a", lm, 0.0), NumericError);
    double ppl = sequence_perplexity("b a", lm, 1e-12);
    CHECK(std::isfinite(ppl));
    CHECK(ppl >= 1.0);
}

TEST_CASE("generative score is never positive") {
    UniformLm lm(7);
    std::vector<std::vector<std::string>> corpus{{"x", "y", "z"}, {"y", "z"}};
    BigramLm bg(corpus, 0.5);
    for (const char* text : {"x", "x y", "x y z", "z z z z"}) {
        CHECK(generative_score(text, lm) <= 0.0);
        CHECK(generative_score(text, bg) <= 0.0);
        CHECK(sequence_perplexity(text, bg) >= 1.0);
    }
}

TEST_CASE("finetuning is a no-op at zero steps and overfits one example") {
    TrainableBigramLm lm({"the", "boy", "climbs", "stool"});
    std::vector<std::pair<std::string, std::string>> pairs{{"the boy", "climbs stool"}};
    double before = generative_score("the boy climbs stool", lm);
    finetune_generative(lm, pairs, 0, 0.5);
    CHECK(generative_score("the boy climbs stool", lm) == doctest::Approx(before));

    double loss = lm.conditional_loss("the boy", "climbs stool");
    for (int step = 0; step < 25; ++step) {
        finetune_generative(lm, pairs, 1, 0.5);
        double next = lm.conditional_loss("the boy", "climbs stool");
        CHECK(next < loss);  // strict decrease while overfitting one example
        loss = next;
    }
}

TEST_CASE("finetuning a backend without training support fails") {
    UniformLm lm(4);
    std::vector<std::pair<std::string, std::string>> pairs{{"a", "b"}};
    CHECK_THROWS_AS(finetune_generative(lm, pairs, 1, 0.1), CapabilityError);
}

TEST_CASE("baseline similarity identities") {
    HashEncoder enc(32, 0);
    CHECK(baseline_similarity_score("the boy climbs", "the boy climbs", enc) ==
          doctest::Approx(1.0).epsilon(1e-6));
    double f = baseline_similarity_score("completely different words", "another thing", enc);
    CHECK(f >= -1.0);
    CHECK(f <= 1.0);
    // vector-level fixtures behind the score
    CHECK(cosine({1, 0}, {0, 1}) == 0.0);
    CHECK(cosine({2, 0}, {5, 0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(cosine({0, 0}, {1, 0}), NumericError);
}

TEST_CASE("cnn input shapes") {
    HashEncoder enc(4, 0);
    Mat m = build_cnn_input("one two three", "four five", enc);
    CHECK(m.rows == 4);
    CHECK(m.cols == 5);
    Mat m2 = build_cnn_input("single", "word", enc);
    CHECK(m2.rows == 4);
    CHECK(m2.cols == 2);
    CHECK_THROWS_AS(build_cnn_input("", "word", enc), DataError);
}

TEST_CASE("cnn input columns are the backend word vectors in order") {
    HashEncoder enc(6, 9);
    Mat m = build_cnn_input("alpha beta", "gamma", enc);
    Vec a = enc.word_vector("alpha");
    Vec b = enc.word_vector("beta");
    Vec c = enc.word_vector("gamma");
    for (int r = 0; r < 6; ++r) {
        CHECK(m.at(r, 0) == doctest::Approx(a[r]));
        CHECK(m.at(r, 1) == doctest::Approx(b[r]));
        CHECK(m.at(r, 2) == doctest::Approx(c[r]));
    }
}

TEST_CASE("head analytic gradients match central differences") {
    Rng rng(7001);
    for (int instance = 0; instance < 10; ++instance) {
        int in_dim = 3 + static_cast<int>(rng.index(6));
        int hidden = (instance % 2 == 0) ? 0 : 2 + static_cast<int>(rng.index(4));
        FfnnHead head(in_dim, hidden);
        head.init_params(rng, 0.8);
        Vec x(in_dim);
        for (double& v : x) v = rng.gauss();
        double y = (instance % 3 == 0) ? 1.0 : 0.0;

        // BCE loss through the sigmoid, as used by the classifier trainer
        auto loss = [&]() {
            double z = head.logit(x);
            return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
        };
        Vec analytic(head.params().size(), 0.0);
        double z = head.logit(x);
        head.logit_backward(x, sigmoid(z) - y, analytic);
        Vec numeric = gradcheck::central_differences(loss, head.params());
        CHECK(gradcheck::relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("cnn analytic gradients match central differences") {
    Rng rng(7002);
    HashEncoder enc(5, 11);
    for (int instance = 0; instance < 10; ++instance) {
        CnnScorer cnn(5, 3, 2, instance % 2 == 0 ? 0 : 3);
        cnn.init_params(rng, 0.7);
        std::string t1 = "w" + std::to_string(instance) + " x" + std::to_string(instance);
        std::string t2 = "y" + std::to_string(instance) + " z q";
        Mat input = build_cnn_input(t1, t2, enc);
        double y = instance % 2 ? 1.0 : 0.0;
        auto loss = [&]() {
            double z = cnn.logit(input);
            return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
        };
        Vec analytic(cnn.params().size(), 0.0);
        double z = cnn.logit(input);
        cnn.logit_backward(input, sigmoid(z) - y, analytic);
        Vec numeric = gradcheck::central_differences(loss, cnn.params());
        CHECK(gradcheck::relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("discriminative margin-loss gradients match central differences") {
    Rng rng(7003);
    HashEncoder enc(6, 21);
    for (int instance = 0; instance < 10; ++instance) {
        FfnnHead mlp(30, instance % 2 == 0 ? 0 : 4);
        mlp.init_params(rng, 0.5);
        Vec a = enc.sentence_vector("anchor words " + std::to_string(instance));
        Vec p = enc.sentence_vector("positive partner " + std::to_string(instance));
        Vec q = enc.sentence_vector("negative partner " + std::to_string(instance));
        const double n = 5.0;
        auto loss = [&]() {
            double l = 0.0;
            l += margin_loss(mlp.logit(concat_features(a, p)),
                             mlp.logit(concat_features(a, q)), n);
            l += margin_loss(mlp.logit(concat_features(p, a)),
                             mlp.logit(concat_features(q, a)), n);
            return l;
        };
        Vec analytic(mlp.params().size(), 0.0);
        {
            Vec xp = concat_features(a, p), xn = concat_features(a, q);
            if (margin_loss(mlp.logit(xp), mlp.logit(xn), n) > 0.0) {
                mlp.logit_backward(xp, -1.0, analytic);
                mlp.logit_backward(xn, +1.0, analytic);
            }
            Vec yp = concat_features(p, a), yn = concat_features(q, a);
            if (margin_loss(mlp.logit(yp), mlp.logit(yn), n) > 0.0) {
                mlp.logit_backward(yp, -1.0, analytic);
                mlp.logit_backward(yn, +1.0, analytic);
            }
        }
        Vec numeric = gradcheck::central_differences(loss, mlp.params());
        CHECK(gradcheck::relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("inference is deterministic for a fixed checkpoint") {
    Rng rng(8);
    FfnnHead head(24, 24);
    head.init_params(rng);
    Checkpoint ckpt;
    ckpt.config.family = ScorerFamily::classifier;
    ckpt.config.backend = "hash:dim=24";
    ckpt.parameters["head"] = head.to_json();
    Scorer scorer = Scorer::from_checkpoint(ckpt);
    double a = scorer.score("the boy climbs the stool", "the stool is tipping");
    double b = scorer.score("the boy climbs the stool", "the stool is tipping");
    CHECK(a == b);  // bit identical

    // and across a save/load round trip
    auto path = std::filesystem::temp_directory_path() / "cohmark_ckpt_test.json";
    ckpt.save(path);
    Scorer reloaded = Scorer::from_checkpoint(Checkpoint::load(path));
    CHECK(reloaded.score("the boy climbs the stool", "the stool is tipping") == a);
    std::filesystem::remove(path);
}

TEST_CASE("scorer config validation enforces the invariant sets") {
    ScorerConfig c;
    c.margin = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.margin = 5.0;
    c.optimizer = "sgd";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.optimizer = "adamw";
    c.learning_rate = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.learning_rate = 2e-5;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("backend registry specs") {
    auto enc = make_encoder("hash:dim=12,salt=4");
    CHECK(enc->dim() == 12);
    auto lm = make_generative("uniform:vocab=32");
    CHECK(sequence_perplexity("a b", *lm) == doctest::Approx(32.0));
    CHECK_THROWS_AS(make_encoder("bert"), ConfigError);
    CHECK_THROWS_AS(make_generative("gpt2"), ConfigError);
}

TEST_CASE("untrained scorers exist only for parameter-free families") {
    ScorerConfig c;
    c.family = ScorerFamily::similarity_baseline;
    c.backend = "hash:dim=16";
    CHECK_NOTHROW(Scorer::untrained(c));
    c.family = ScorerFamily::generative;
    c.backend = "uniform:vocab=16";
    CHECK_NOTHROW(Scorer::untrained(c));
    c.family = ScorerFamily::classifier;
    CHECK_THROWS_AS(Scorer::untrained(c), DataError);
}
