from rest_framework import serializers

from toolchain.serializers import PpaRefFieldsMixin, TestbenchFieldsMixin

from .grpo import Task


class TaskSerializer(PpaRefFieldsMixin, TestbenchFieldsMixin, serializers.Serializer):
    """
    Serializer for toy-policy tasks: an instruction and its fixed candidate pool
    """
    testbench_required = False
    ppa_required = False

    id = serializers.CharField(max_length=64)
    instruction = serializers.CharField(trim_whitespace=False)
    candidates = serializers.ListField(
        child=serializers.CharField(trim_whitespace=False, allow_blank=True), min_length=1,
    )

    def validate(self, attrs):
        return self.validate_ppa_attrs(self.validate_testbench_attrs(attrs))

    def create(self, validated_data):
        validated_data['candidates'] = tuple(validated_data['candidates'])
        return Task(**validated_data)
