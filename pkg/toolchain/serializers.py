"""Shared DRF fields for testbenches and reference PPA, plus the eval_batch task serializer."""

from rest_framework import serializers

from .exceptions import ToolchainError
from .stages import BACKENDS, MOCK, VECTOR_TABLE, VERILOG_SOURCE, EvalRequest, Testbench
from .verilog_mini import PpaMetrics

PPA_FIELDS = (
    ('ppa_ref.delay_ns', 'reference_ppa.delay'),
    ('ppa_ref.area_um2', 'reference_ppa.area'),
    ('ppa_ref.power_w', 'reference_ppa.power'),
)


def text_field(**kwargs):
    return serializers.CharField(trim_whitespace=False, **kwargs)


class TestbenchFieldsMixin:
    """Adds testbench_kind / testbench and turns them back into a Testbench."""

    testbench_required = True

    def get_fields(self):
        fields = super().get_fields()
        fields['testbench_kind'] = serializers.ChoiceField(
            choices=[VECTOR_TABLE, VERILOG_SOURCE], source='testbench.kind', required=False,
        )
        fields['testbench'] = text_field(source='testbench.body', required=self.testbench_required)
        return fields

    def validate_testbench_attrs(self, attrs):
        data = attrs.get('testbench')
        if data is None:
            return attrs
        body = data.get('body', '')
        try:
            attrs['testbench'] = Testbench(data['kind'], body) if 'kind' in data else Testbench.from_text(body)
        except (ValueError, ToolchainError) as exc:
            raise serializers.ValidationError({'testbench': str(exc)})
        return attrs


class PpaRefFieldsMixin:
    """Flat `ppa_ref.*` keys mapped onto a PpaMetrics."""

    ppa_required = True

    def get_fields(self):
        fields = super().get_fields()
        for name, source in PPA_FIELDS:
            fields[name] = serializers.FloatField(source=source, required=self.ppa_required)
        return fields

    def validate_ppa_attrs(self, attrs):
        data = attrs.get('reference_ppa')
        if data is None:
            return attrs
        if len(data) != len(PPA_FIELDS):
            raise serializers.ValidationError("ppa_ref needs delay_ns, area_um2 and power_w together")
        metrics = PpaMetrics(**data)
        if not metrics.is_positive():
            raise serializers.ValidationError("ppa_ref values must all be strictly positive")
        attrs['reference_ppa'] = metrics
        return attrs


class EvalTaskSerializer(PpaRefFieldsMixin, TestbenchFieldsMixin, serializers.Serializer):
    """
    Serializer for eval_batch task lines
    """
    testbench_required = False
    ppa_required = False

    id = serializers.CharField(max_length=64)
    code = text_field(allow_blank=True)
    backend = serializers.ChoiceField(choices=BACKENDS, required=False)
    measure_ppa = serializers.BooleanField(required=False, default=True)

    def validate(self, attrs):
        return self.validate_ppa_attrs(self.validate_testbench_attrs(attrs))

    def create(self, validated_data):
        return dict(validated_data)


def eval_request(task, timeouts, default_backend=MOCK):
    """EvalRequest for one validated task line."""
    return EvalRequest(
        code=task['code'],
        testbench=task.get('testbench'),
        reference_ppa=task.get('reference_ppa'),
        stage_timeouts=timeouts,
        backend=task.get('backend') or default_backend,
        measure_ppa=task.get('measure_ppa', True),
    )
